#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "wloja/io.hpp"

namespace wloja {

void write_csv(std::ostream& os, const InequalityReport& report) {
  os << "sample,lhs,rhs,margin\n";
  for (const auto& row : report.rows) {
    os << row.sample << ',' << format_real(row.lhs) << ',' << format_real(row.rhs) << ',' << format_real(row.margin)
       << '\n';
  }
  os << "# " << report.name << " min_margin=" << format_real(report.min_margin) << " worst=" << report.worst
     << " tolerance=" << format_real(report.tolerance) << " skipped=" << report.skipped
     << " pass=" << (report.pass ? "true" : "false") << '\n';
}

void write_csv(std::ostream& os, const RateBoundReport& report) {
  os << "t,J,J_bound,w2,w2_bound\n";
  for (const auto& row : report.rows) {
    os << format_real(row.t) << ',' << format_real(row.J) << ',' << format_real(row.J_bound) << ','
       << format_real(row.w2) << ',' << format_real(row.w2_bound) << '\n';
  }
}

namespace {

[[noreturn]] void fail(const std::string& source, long line, const std::string& what) {
  throw ConfigError(source + ":" + std::to_string(line), what);
}

double parse_number(const std::string& text, const std::string& source, long line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(source, line, "not a number: '" + text + "'");
  }
  if (used != text.size()) fail(source, line, "not a number: '" + text + "'");
  return v;
}

}  // namespace

Measure<double> read_measure_csv(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) fail(source, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool grid;
  if (line == "x,density") {
    grid = true;
  } else if (line == "x,weight") {
    grid = false;
  } else {
    fail(source, 1, "expected header 'x,density' or 'x,weight'");
  }
  std::vector<double> x, y;
  long number = 1;
  while (std::getline(is, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      fail(source, number, "expected two comma-separated values");
    }
    x.push_back(parse_number(line.substr(0, comma), source, number));
    y.push_back(parse_number(line.substr(comma + 1), source, number));
  }
  try {
    if (!grid) {
      std::vector<AtomicMeasure<double>::Atom> atoms;
      for (std::size_t j = 0; j < x.size(); ++j) atoms.push_back({x[j], y[j]});
      return AtomicMeasure<double>::normalized(std::move(atoms));
    }
    if (x.size() < 2) fail(source, number, "a grid measure needs at least two cells");
    const double dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) {
      const double gap = x[i] - x[i - 1];
      if (!(std::abs(gap - dx) <= 1e-9 * (1 + std::abs(dx)))) {
        fail(source, static_cast<long>(i) + 2, "cell centres are not equally spaced");
      }
    }
    Grid1D<double> g(x.front() - dx / 2, x.back() + dx / 2, static_cast<Index>(x.size()));
    ArrayX<double> values = Eigen::Map<const ArrayX<double>>(y.data(), static_cast<Index>(y.size()));
    return normalize(values, g);
  } catch (const ConstructionError& e) {
    fail(source, number, e.what());
  }
}

Measure<double> read_measure_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open measure file");
  return read_measure_csv(in, path);
}

}  // namespace wloja
