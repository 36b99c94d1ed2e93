#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "wloja/io.hpp"
#include "wloja/measures.hpp"

using namespace wloja;

TEST_CASE("grid construction") {
  Grid1D<double> g(-1, 1, 4);
  CHECK(g.dx() == doctest::Approx(0.5));
  CHECK(g.center(0) == doctest::Approx(-0.75));
  CHECK(g.edge(4) == doctest::Approx(1));
  for (Index i = 1; i < g.n(); ++i) CHECK(g.center(i) - g.center(i - 1) == doctest::Approx(g.dx()));
  CHECK_THROWS_AS(Grid1D<double>(1, 1, 4), ConstructionError);
  CHECK_THROWS_AS(Grid1D<double>(0, 1, 1), ConstructionError);
}

TEST_CASE("normalize") {
  Grid1D<double> g(0, 1, 4);
  auto ones = normalize(ArrayX<double>::Ones(4), g);
  for (Index i = 0; i < 4; ++i) CHECK(ones.density()(i) == 1.0);

  ArrayX<double> spike(4);
  spike << 0, 2, 0, 0;
  auto m = normalize(spike, g);
  CHECK(m.density()(1) == doctest::Approx(4.0));
  CHECK(m.density()(0) == 0.0);

  Grid1D<double> wide(-8, 8, 800);
  auto raw = (-0.5 * wide.centers().square()).exp().eval();
  CHECK(std::abs(normalize(raw, wide).mass() - 1) <= 1e-12);

  CHECK_THROWS_AS(normalize(ArrayX<double>::Zero(4), g), ConstructionError);
  ArrayX<double> neg(4);
  neg << 1, -1, 1, 1;
  CHECK_THROWS_AS(normalize(neg, g), ConstructionError);
  ArrayX<double> nan(4);
  nan << 1, std::nan(""), 1, 1;
  CHECK_THROWS_AS(normalize(nan, g), ConstructionError);
  CHECK_THROWS_AS(normalize(ArrayX<double>::Ones(3), g), ConstructionError);
}

TEST_CASE("normalize is idempotent") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 5);
  Grid1D<double> g(-2, 3, 37);
  for (int trial = 0; trial < 100; ++trial) {
    ArrayX<double> v = ArrayX<double>::NullaryExpr(g.n(), [&](Index) { return u(rng); });
    auto once = normalize(v, g);
    auto twice = normalize(once.density(), g);
    CHECK((once.density() == twice.density()).all());
  }
}

TEST_CASE("grid measure validation") {
  Grid1D<double> g(0, 1, 4);
  CHECK_THROWS_AS(GridMeasure<double>(g, ArrayX<double>::Constant(4, 2.0)), ConstructionError);
  CHECK_THROWS_AS(GridMeasure<double>(g, ArrayX<double>::Ones(5)), ConstructionError);
}

TEST_CASE("atomic measures merge duplicates") {
  AtomicMeasure<double> m({{1.0, 0.25}, {0.0, 0.5}, {1.0 + 1e-13, 0.25}});
  REQUIRE(m.size() == 2);
  CHECK(m.position(0) == 0.0);
  CHECK(m.weight(1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(AtomicMeasure<double>({{0.0, 0.5}}), ConstructionError);
  CHECK_THROWS_AS(AtomicMeasure<double>({{0.0, -0.5}, {1.0, 1.5}}), ConstructionError);
  CHECK_THROWS_AS(AtomicMeasure<double>(std::vector<AtomicMeasure<double>::Atom>{}), ConstructionError);
}

TEST_CASE("quantile tables") {
  auto dirac = AtomicMeasure<double>::dirac(2.0);
  for (Index M : {2, 7, 64}) {
    auto q = quantile_table(dirac, M);
    CHECK((q.positions() == 2.0).all());
  }

  auto uni = uniform(Grid1D<double>(0, 1, 4), 0.0, 1.0);
  auto q = quantile_table(uni, 2);
  CHECK(q.positions()(0) == doctest::Approx(0.25));
  CHECK(q.positions()(1) == doctest::Approx(0.75));

  Grid1D<double> g(-8, 8, 800);
  auto n01 = gaussian(g, 0.0, 1.0);
  auto t = quantile_table(n01, 512);
  CHECK(std::abs(0.5 * (t.positions()(255) + t.positions()(256))) <= 1e-6);
  CHECK(t.level(0) == doctest::Approx(0.5 / 512));

  CHECK_THROWS_AS(quantile_table(n01, 1), PreconditionError);
  ArrayX<double> decreasing(3);
  decreasing << 1, 0, 2;
  CHECK_THROWS_AS(QuantileTable<double>{decreasing}, ConstructionError);
}

TEST_CASE("quantile and cdf are inverse") {
  std::mt19937_64 rng(5);
  Grid1D<double> g(-6, 6, 300);
  for (int trial = 0; trial < 20; ++trial) {
    auto mu = oracle::random_density(rng, g);
    auto q = quantile_table(mu, 1200);
    for (Index k = 0; k < q.size(); ++k) CHECK(std::abs(mu.cdf(q.positions()(k)) - q.level(k)) <= 1e-10);
  }
}

TEST_CASE("atomic quantiles take the left-most atom reaching the level") {
  AtomicMeasure<double> m({{0.0, 0.5}, {1.0, 0.5}});
  auto q = quantile_table(m, 4);
  CHECK(q.positions()(1) == 0.0);
  CHECK(q.positions()(2) == 1.0);
}

TEST_CASE("moments") {
  CHECK(moment(AtomicMeasure<double>::dirac(2.0), 2) == 4.0);
  CHECK(moment(uniform(Grid1D<double>(0, 1, 10), 0.0, 1.0), 1) == doctest::Approx(0.5));
  Grid1D<double> g(-8, 8, 800);
  CHECK(std::abs(moment(gaussian(g, 0.0, 1.0), 2) - 1) <= 1e-4);
  CHECK_THROWS_AS(moment(gaussian(g, 0.0, 1.0), 3), PreconditionError);
  Measure<double> v = AtomicMeasure<double>::dirac(3.0);
  CHECK(moment(v, 1) == 3.0);
}

TEST_CASE("variance is nonnegative") {
  std::mt19937_64 rng(8);
  Grid1D<double> g(-6, 6, 200);
  for (int trial = 0; trial < 50; ++trial) {
    auto mu = oracle::random_density(rng, g);
    CHECK(moment(mu, 2) >= moment(mu, 1) * moment(mu, 1));
    auto a = oracle::random_atoms(rng, 1 + trial % 7);
    CHECK(moment(a, 2) >= moment(a, 1) * moment(a, 1) - 1e-15);
  }
}

TEST_CASE("gaussian constructor") {
  Grid1D<double> g(-8, 8, 800);
  auto a = gaussian(g, 0.0, 1.0);
  CHECK(std::abs(moment(a, 1)) <= 1e-4);
  CHECK(std::abs(moment(a, 2) - 1) <= 1e-4);
  CHECK(std::abs(moment(gaussian(g, 1.0, 1.0), 1) - 1) <= 1e-4);
  CHECK_THROWS_AS(gaussian(g, 0.0, 0.0), ConstructionError);

  std::vector<std::string> warnings;
  auto previous = set_warning_handler([&](std::string_view w) { warnings.emplace_back(w); });
  auto wide = gaussian(Grid1D<double>(-1, 1, 10), 0.0, 5.0);
  set_warning_handler(previous);
  CHECK(wide.size() == 10);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("truncated") != std::string::npos);
}

TEST_CASE("uniform and cell shifts") {
  Grid1D<double> g(0, 1, 10);
  auto u = uniform(g, 0.25, 0.75);
  CHECK(u.density()(2) == doctest::Approx(1.0));
  CHECK(u.density()(5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(uniform(g, 1.0, 0.0), ConstructionError);
  auto s = shift_cells(u, 2);
  CHECK(s.density()(7) == doctest::Approx(u.density()(5)));
  auto t = translate(AtomicMeasure<double>::dirac(1.0), 0.5);
  CHECK(t.position(0) == 1.5);
}

TEST_CASE("measure csv round trip") {
  Grid1D<double> g(-2, 2, 16);
  auto mu = gaussian(g, 0.3, 0.7);
  std::stringstream ss;
  write_csv(ss, mu);
  auto back = read_measure_csv(ss);
  const auto& grid = std::get<GridMeasure<double>>(back);
  CHECK(grid.grid().n() == 16);
  CHECK(grid.grid().x_min() == doctest::Approx(-2));
  CHECK((grid.density() - mu.density()).abs().maxCoeff() <= 1e-15);

  AtomicMeasure<double> a({{0.0, 0.25}, {1.5, 0.75}});
  std::stringstream sa;
  write_csv(sa, a);
  CHECK(sa.str() == "x,weight\n0,0.25\n1.5,0.75\n");
  auto atoms = std::get<AtomicMeasure<double>>(read_measure_csv(sa));
  CHECK(atoms.weight(1) == 0.75);

  std::stringstream bad("x,density\n0,1\n1,oops\n");
  CHECK_THROWS_AS(read_measure_csv(bad, "bad.csv"), ConfigError);
  std::stringstream header("a,b\n");
  CHECK_THROWS_AS(read_measure_csv(header), ConfigError);
}
