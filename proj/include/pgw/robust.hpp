#pragma once

#include "pgw/common.hpp"
#include "pgw/coupling.hpp"
#include "pgw/mmspace.hpp"
#include "pgw/solver.hpp"

#include <map>
#include <string>
#include <vector>

namespace pgw {

inline constexpr double kDefaultBracketTol = 1e-4;

/// Raised when the robust condition is never met, which points at a solver
/// failure rather than a property of the inputs.
class NoCrossingError : public Error {
public:
  using Error::Error;
};

struct RobustResult {
  /// Metric value t* = eps*/(1+eps*) (equivalently delta* for mPGW).
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  /// Partial distance evaluated at `hi`.
  double pgw_at_crossing = 0.0;
  /// Coupling realizing the evaluation at `hi`.
  Coupling coupling;
  int evaluations = 0;
};

/// eps -> delta = eps/(1+eps); eps = inf maps to 1.
inline double convert_params(double eps) {
  if (std::isnan(eps) || eps < 0) throw ParameterError("eps must be >= 0");
  if (std::isinf(eps)) return 1.0;
  return eps / (1.0 + eps);
}

/// delta -> eps = delta/(1-delta); delta = 1 maps to inf.
inline double convert_params_inv(double delta) {
  if (std::isnan(delta) || delta < 0 || delta > 1) throw ParameterError("delta must lie in [0, 1]");
  if (delta == 1.0) return kInf;
  return delta / (1.0 - delta);
}

namespace detail {

/// Bisection driver shared by both robust metrics. `eval(t, warm, restarts)`
/// returns the partial distance at parameter t, seeded with `warm` (a coupling
/// feasible at t, possibly empty). `seed_from(t_src, pi, t_dst)` maps a coupling
/// computed at a smaller parameter into the feasible set at t_dst. The
/// condition is `value <= k * slope(t) + tol`.
template <class Eval, class SeedFrom, class Slope>
RobustResult bisect_robust(Eval eval, SeedFrom seed_from, Slope slope, double k, double t_max, double t_cap,
                           double bracket_tol, double tol, int restarts) {
  if (!(k > 0) || !std::isfinite(k)) throw ParameterError("k must be a positive finite real");
  if (!(bracket_tol > 0)) throw ParameterError("bracket_tol must be > 0");

  struct Point {
    double value;
    Matrix pi;
    bool ok;
  };
  std::map<double, Point> seen;
  int evaluations = 0;

  auto evaluate = [&](double t, int n_restarts) -> const Point& {
    Matrix warm;
    auto it = seen.lower_bound(t);
    if (it != seen.begin()) {
      --it;
      warm = seed_from(it->first, it->second.pi, t);
    }
    auto r = eval(t, warm, n_restarts);
    ++evaluations;
    const bool ok = r.value <= k * slope(t) + tol;
    auto& slot = seen[t];
    if (slot.pi.size() == 0 || r.value < slot.value) slot = Point{r.value, r.coupling.matrix(), ok};
    return slot;
  };

  auto finish = [&](double lo, double hi) {
    const Point& at = seen.at(hi);
    RobustResult res;
    res.value = hi;
    res.lo = lo;
    res.hi = hi;
    res.pgw_at_crossing = at.value;
    res.coupling = Coupling(at.pi);
    res.evaluations = evaluations;
    return res;
  };

  if (evaluate(0.0, restarts).ok) return finish(0.0, 0.0);

  double lo = 0.0;
  double hi = std::min(t_max, t_cap);
  while (!evaluate(hi, restarts).ok) {
    if (hi >= t_cap)
      throw NoCrossingError("robust condition never satisfied up to t = " + std::to_string(t_cap) +
                            "; the partial distance solver did not reach a low enough value");
    lo = hi;
    hi = std::min(t_cap, 1.0 - (1.0 - hi) / 10.0);
  }

  for (int round = 0; round < 64; ++round) {
    while (hi - lo > bracket_tol) {
      const double mid = 0.5 * (lo + hi);
      if (evaluate(mid, restarts).ok) hi = mid;
      else lo = mid;
    }
    // A failed condition may be a solver artifact; confirm lo with more restarts.
    if (!evaluate(lo, 4 * restarts).ok) break;
    hi = lo;
    lo = 0.0;
    for (const auto& [t, pt] : seen)
      if (t < hi && !pt.ok) lo = t;
    if (lo == 0.0 && seen.at(0.0).ok) return finish(0.0, 0.0);
  }
  return finish(lo, hi);
}

inline double min_weight(const MMSpace& x, const MMSpace& y) {
  return std::min(x.weights().minCoeff(), y.weights().minCoeff());
}

} // namespace detail

/// Robust partial GW metric: inf { t = eps/(1+eps) : PGW_{(eps,eps),p}(X,Y) <= k eps },
/// located by bisection on t. The reported value is the certified upper end of
/// the final bracket.
inline RobustResult robust_pgw(const MMSpace& x, const MMSpace& y, double k, Exponent p, const SolveConfig& cfg = {},
                               double bracket_tol = kDefaultBracketTol) {
  cfg.check();
  require_valid(x, true, "first space");
  require_valid(y, true, "second space");
  auto eval = [&](double t, const Matrix& warm, int restarts) {
    SolveConfig c = cfg;
    c.restarts = restarts;
    if (warm.size()) c.warm_starts.push_back(warm);
    const double eps = convert_params_inv(t);
    return solve_pgw(x, y, eps, eps, p, c);
  };
  // C_eps grows with eps, so a coupling from a smaller t stays feasible.
  auto seed_from = [](double, const Matrix& pi, double) { return pi; };
  auto slope = [](double t) { return convert_params_inv(t); };
  const double t_max = 1.0 - detail::min_weight(x, y);
  return detail::bisect_robust(eval, seed_from, slope, k, t_max, 1.0 - 1e-12, bracket_tol, cfg.fw_tol, cfg.restarts);
}

/// Robust mass-constrained metric: inf { delta in [0,1] : mPGW_{1-delta,p}(X,Y) <= k delta }.
inline RobustResult robust_mpgw(const MMSpace& x, const MMSpace& y, double k, Exponent p, const SolveConfig& cfg = {},
                                double bracket_tol = kDefaultBracketTol) {
  cfg.check();
  require_valid(x, true, "first space");
  require_valid(y, true, "second space");
  const MMSpace xn = x.normalized(), yn = y.normalized();
  auto eval = [&](double d, const Matrix& warm, int restarts) {
    SolveConfig c = cfg;
    c.restarts = restarts;
    if (warm.size()) c.warm_starts.push_back(warm);
    return solve_mpgw(xn, yn, 1.0 - d, p, c);
  };
  // Shrinking a feasible plan keeps it below both marginals.
  auto seed_from = [](double d_src, const Matrix& pi, double d_dst) -> Matrix {
    const double src_mass = 1.0 - d_src;
    if (src_mass <= 0) return Matrix();
    return pi * ((1.0 - d_dst) / src_mass);
  };
  auto slope = [](double d) { return d; };
  const double t_max = 1.0 - detail::min_weight(xn, yn);
  return detail::bisect_robust(eval, seed_from, slope, k, t_max, 1.0, bracket_tol, cfg.fw_tol, cfg.restarts);
}

struct CurvePoint {
  double eps = 0.0;
  double value = 0.0;
};

struct CurveWarning {
  double eps_prev = 0.0;
  double eps = 0.0;
  double increase = 0.0;
  std::string message;
};

struct CurveResult {
  std::vector<CurvePoint> points;
  std::vector<CurveWarning> warnings;
};

/// Samples eps -> PGW_{(eps,eps),p}(X,Y) on an ascending grid. Every point is
/// solved independently, so an increase beyond 2 fw_tol flags a solver basin
/// failure at that eps.
inline CurveResult pgw_curve(const MMSpace& x, const MMSpace& y, Exponent p, const std::vector<double>& grid,
                             const SolveConfig& cfg = {}) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::isnan(grid[i]) || grid[i] < 0) throw ParameterError("curve grid values must be >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw ParameterError("curve grid must be sorted ascending");
  }
  CurveResult out;
  for (double eps : grid) out.points.push_back({eps, solve_pgw(x, y, eps, eps, p, cfg).value});
  for (std::size_t i = 1; i < out.points.size(); ++i) {
    const double inc = out.points[i].value - out.points[i - 1].value;
    if (inc > 2.0 * cfg.fw_tol) {
      CurveWarning w;
      w.eps_prev = out.points[i - 1].eps;
      w.eps = out.points[i].eps;
      w.increase = inc;
      w.message = "partial distance increased by " + std::to_string(inc) + " between eps = " +
                  std::to_string(w.eps_prev) + " and eps = " + std::to_string(w.eps);
      out.warnings.push_back(std::move(w));
    }
  }
  return out;
}

} // namespace pgw
