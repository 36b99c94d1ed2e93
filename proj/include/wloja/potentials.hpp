#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wloja/common.hpp"

namespace wloja {

/// Argmin V: either finitely many points or a closed interval.
template <typename Scalar_>
class ArgminSet {
 public:
  using Scalar = Scalar_;

  static ArgminSet points(std::vector<Scalar> pts) {
    ArgminSet s;
    std::sort(pts.begin(), pts.end());
    s.points_ = std::move(pts);
    return s;
  }

  static ArgminSet interval(Scalar lo, Scalar hi) {
    if (!(hi >= lo)) throw ConstructionError("ArgminSet: empty interval");
    ArgminSet s;
    s.interval_ = {lo, hi};
    return s;
  }

  bool empty() const { return points_.empty() && !interval_; }
  bool is_interval() const { return interval_.has_value(); }
  const std::vector<Scalar>& point_list() const { return points_; }
  std::pair<Scalar, Scalar> bounds() const { return *interval_; }

  /// Nearest element of the set.
  Scalar project(Scalar x) const {
    if (empty()) throw PreconditionError("ArgminSet: empty minimizer set");
    if (interval_) return std::clamp(x, interval_->first, interval_->second);
    Scalar best = points_.front();
    for (Scalar p : points_) {
      if (std::abs(x - p) < std::abs(x - best)) best = p;
    }
    return best;
  }

  Scalar distance(Scalar x) const { return std::abs(x - project(x)); }

  bool contains(Scalar x, Scalar tol = Scalar(0)) const {
    return !empty() && distance(x) <= tol;
  }

 private:
  std::vector<Scalar> points_;
  std::optional<std::pair<Scalar, Scalar>> interval_;
};

/// V = convex_part + bounded_part with convex_part'' >= K > 0.
template <typename Scalar>
struct Decomposition {
  std::function<Scalar(Scalar)> convex_part;
  std::function<Scalar(Scalar)> bounded_part;
  Scalar K;
};

/// Confinement potential on the real line, with a minimal-norm subgradient
/// selection (zero on Argmin V), a lambda-convexity modulus and the window on
/// which sampled quantities (osc, numerical argmin) are measured.
template <typename Scalar_>
class Potential {
 public:
  using Scalar = Scalar_;
  using Fn = std::function<Scalar(Scalar)>;

  Potential(std::string name, Fn value, Fn derivative, Scalar modulus, ArgminSet<Scalar> argmin,
            std::pair<Scalar, Scalar> window,
            std::optional<Decomposition<Scalar>> decomposition = std::nullopt)
      : name_(std::move(name)),
        value_(std::move(value)),
        derivative_(std::move(derivative)),
        modulus_(modulus),
        argmin_(std::move(argmin)),
        window_(window),
        decomposition_(std::move(decomposition)) {
    if (!value_ || !derivative_) throw ConstructionError("Potential: value and derivative required");
    if (!(window_.second > window_.first)) throw ConstructionError("Potential: empty window");
  }

  const std::string& name() const { return name_; }
  Scalar operator()(Scalar x) const { return value_(x); }
  Scalar value(Scalar x) const { return value_(x); }

  Scalar derivative(Scalar x) const {
    if (argmin_.contains(x, argmin_tolerance())) return Scalar(0);
    return derivative_(x);
  }

  /// lambda with V - lambda x^2 / 2 convex.
  Scalar modulus() const { return modulus_; }
  const ArgminSet<Scalar>& argmin() const { return argmin_; }
  std::pair<Scalar, Scalar> window() const { return window_; }
  const std::optional<Decomposition<Scalar>>& decomposition() const { return decomposition_; }

  Scalar min_value() const {
    if (argmin_.empty()) throw PreconditionError("Potential: empty minimizer set");
    return argmin_.is_interval() ? value_(argmin_.bounds().first) : value_(argmin_.point_list().front());
  }

  static constexpr Scalar argmin_tolerance() { return Scalar(1e-12); }

 private:
  std::string name_;
  Fn value_;
  Fn derivative_;
  Scalar modulus_;
  ArgminSet<Scalar> argmin_;
  std::pair<Scalar, Scalar> window_;
  std::optional<Decomposition<Scalar>> decomposition_;
};

namespace detail {

/// Global minimizers of a smooth function on [lo, hi]: scan for sign changes of
/// the derivative on a uniform grid, bisect each, keep those at the lowest value.
template <typename Scalar, typename F, typename DF>
std::vector<Scalar> bracket_minimizers(const F& value, const DF& derivative, Scalar lo, Scalar hi,
                                       Index samples = 10000) {
  std::vector<Scalar> candidates{lo, hi};
  Scalar prev_x = lo;
  Scalar prev_d = derivative(lo);
  for (Index k = 1; k <= samples; ++k) {
    const Scalar x = lo + (hi - lo) * Scalar(k) / Scalar(samples);
    const Scalar d = derivative(x);
    if (d == Scalar(0)) {
      candidates.push_back(x);
    } else if (prev_d < Scalar(0) && d > Scalar(0)) {
      Scalar a = prev_x, b = x;
      for (int it = 0; it < 200 && b - a > std::numeric_limits<Scalar>::epsilon() * (1 + std::abs(a)); ++it) {
        const Scalar mid = a + (b - a) / 2;
        (derivative(mid) < Scalar(0) ? a : b) = mid;
      }
      candidates.push_back(a + (b - a) / 2);
    }
    prev_x = x;
    prev_d = d;
  }
  Scalar best = value(candidates.front());
  for (Scalar c : candidates) best = std::min(best, value(c));
  const Scalar slack = Scalar(1e-12) * (1 + std::abs(best));
  std::vector<Scalar> result;
  for (Scalar c : candidates) {
    if (value(c) <= best + slack) result.push_back(c);
  }
  std::sort(result.begin(), result.end());
  result.erase(std::unique(result.begin(), result.end()), result.end());
  return result;
}

}  // namespace detail

namespace builtin {

template <typename Scalar>
using Window = std::pair<Scalar, Scalar>;

template <typename Scalar>
constexpr Window<Scalar> default_window() {
  return {Scalar(-8), Scalar(8)};
}

/// K (x - center)^2 / 2 + offset.
template <typename Scalar>
Potential<Scalar> quadratic(Scalar K, Scalar center = 0, Scalar offset = 0,
                            Window<Scalar> window = default_window<Scalar>()) {
  if (!(K > Scalar(0))) throw ConstructionError("quadratic: K must be positive");
  auto v = [=](Scalar x) { return K * (x - center) * (x - center) / 2 + offset; };
  auto dv = [=](Scalar x) { return K * (x - center); };
  Decomposition<Scalar> split{v, [](Scalar) { return Scalar(0); }, K};
  return Potential<Scalar>("quadratic", v, dv, K, ArgminSet<Scalar>::points({center}), window, split);
}

/// a x^4 - b x^2. The stored modulus is -2b, a lower bound on V''.
template <typename Scalar>
Potential<Scalar> double_well(Scalar a, Scalar b, Window<Scalar> window = default_window<Scalar>()) {
  if (!(a > Scalar(0))) throw ConstructionError("double_well: a must be positive");
  auto v = [=](Scalar x) { return a * x * x * x * x - b * x * x; };
  auto dv = [=](Scalar x) { return 4 * a * x * x * x - 2 * b * x; };
  std::vector<Scalar> minimizers;
  if (b > Scalar(0)) {
    const Scalar z = std::sqrt(b / (2 * a));
    minimizers = {-z, z};
  } else {
    minimizers = {Scalar(0)};
  }
  return Potential<Scalar>("double_well", v, dv, -2 * b, ArgminSet<Scalar>::points(minimizers), window);
}

/// |x - center|, with derivative selection 0 at the kink.
template <typename Scalar>
Potential<Scalar> absolute(Scalar center = 0, Window<Scalar> window = default_window<Scalar>()) {
  auto v = [=](Scalar x) { return std::abs(x - center); };
  auto dv = [=](Scalar x) {
    return x > center ? Scalar(1) : (x < center ? Scalar(-1) : Scalar(0));
  };
  return Potential<Scalar>("abs", v, dv, Scalar(0), ArgminSet<Scalar>::points({center}), window);
}

/// K x^2 / 2 + eps cos x, split as V1 = K x^2 / 2 and V2 = eps cos x.
template <typename Scalar>
Potential<Scalar> quadratic_plus_cosine(Scalar K, Scalar eps,
                                        Window<Scalar> window = default_window<Scalar>()) {
  if (!(K > Scalar(0))) throw ConstructionError("quad_plus_cos: K must be positive");
  auto v1 = [=](Scalar x) { return K * x * x / 2; };
  auto v2 = [=](Scalar x) { return eps * std::cos(x); };
  auto v = [=](Scalar x) { return K * x * x / 2 + eps * std::cos(x); };
  auto dv = [=](Scalar x) { return K * x - eps * std::sin(x); };
  auto minimizers = wloja::detail::bracket_minimizers<Scalar>(v, dv, window.first, window.second);
  return Potential<Scalar>("quad_plus_cos", v, dv, K - std::abs(eps),
                           ArgminSet<Scalar>::points(minimizers), window,
                           Decomposition<Scalar>{v1, v2, K});
}

/// Constant potential; every point of the window minimises it.
template <typename Scalar>
Potential<Scalar> constant(Scalar c, Window<Scalar> window = default_window<Scalar>()) {
  return Potential<Scalar>(
      "constant", [=](Scalar) { return c; }, [](Scalar) { return Scalar(0); }, Scalar(0),
      ArgminSet<Scalar>::interval(window.first, window.second), window);
}

using Params = std::map<std::string, double>;

namespace detail {

inline double param(const Params& p, const std::string& key, std::optional<double> fallback) {
  if (auto it = p.find(key); it != p.end()) return it->second;
  if (fallback) return *fallback;
  throw ConstructionError("potential parameter '" + key + "' is required");
}

inline void check_keys(const Params& p, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : p) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConstructionError("unknown potential parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw ConstructionError("potential parameter '" + key + "' must be finite");
  }
}

}  // namespace detail

/// Builtin potentials by name: quadratic(K, center, offset), double_well(a, b),
/// abs(center), quad_plus_cos(K, eps), constant(c). Every builtin also accepts
/// the window bounds x_min / x_max.
template <typename Scalar>
Potential<Scalar> by_name(const std::string& name, const Params& p = {}) {
  using detail::param;
  const Window<Scalar> window{Scalar(param(p, "x_min", -8.0)), Scalar(param(p, "x_max", 8.0))};
  if (name == "quadratic") {
    detail::check_keys(p, {"K", "center", "offset", "x_min", "x_max"});
    return quadratic<Scalar>(Scalar(param(p, "K", 1.0)), Scalar(param(p, "center", 0.0)),
                             Scalar(param(p, "offset", 0.0)), window);
  }
  if (name == "double_well") {
    detail::check_keys(p, {"a", "b", "x_min", "x_max"});
    return double_well<Scalar>(Scalar(param(p, "a", std::nullopt)), Scalar(param(p, "b", std::nullopt)),
                               window);
  }
  if (name == "abs") {
    detail::check_keys(p, {"center", "x_min", "x_max"});
    return absolute<Scalar>(Scalar(param(p, "center", 0.0)), window);
  }
  if (name == "quad_plus_cos") {
    detail::check_keys(p, {"K", "eps", "x_min", "x_max"});
    return quadratic_plus_cosine<Scalar>(Scalar(param(p, "K", 1.0)), Scalar(param(p, "eps", 1.0)), window);
  }
  if (name == "constant") {
    detail::check_keys(p, {"c", "x_min", "x_max"});
    return constant<Scalar>(Scalar(param(p, "c", 0.0)), window);
  }
  throw ConstructionError("unknown potential '" + name + "'");
}

}  // namespace builtin

/// sup - inf of the bounded part V2 over 10^4 uniform window intervals.
template <typename Scalar>
Scalar osc(const Potential<Scalar>& V, Index intervals = 10000) {
  if (!V.decomposition()) throw PreconditionError("osc: potential '" + V.name() + "' has no decomposition");
  const auto& v2 = V.decomposition()->bounded_part;
  const auto [lo, hi] = V.window();
  Scalar top = -infinity<Scalar>(), bottom = infinity<Scalar>();
  for (Index k = 0; k <= intervals; ++k) {
    const Scalar y = v2(lo + (hi - lo) * Scalar(k) / Scalar(intervals));
    top = std::max(top, y);
    bottom = std::min(bottom, y);
  }
  return top - bottom;
}

/// Squared log-Sobolev constant 2 K exp(-osc) of a bounded perturbation.
template <typename Scalar>
Scalar holley_stroock_rate(Scalar K, Scalar oscillation) {
  if (!(K > Scalar(0)) || !(oscillation >= Scalar(0))) {
    throw PreconditionError("holley_stroock_rate: need K > 0 and osc >= 0");
  }
  return 2 * K * std::exp(-oscillation);
}

}  // namespace wloja
