#pragma once

#include "pgw/common.hpp"
#include "pgw/coupling.hpp"
#include "pgw/distortion.hpp"
#include "pgw/mmspace.hpp"
#include "pgw/random_space.hpp"
#include "pgw/robust.hpp"
#include "pgw/solver.hpp"
#include "pgw/space_json.hpp"
#include "pgw/transport_lp.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace pgw {

enum class CheckStatus { Pass, Fail, Inconclusive };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "PASS";
    case CheckStatus::Fail: return "FAIL";
    case CheckStatus::Inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

/// Outcome of one numerical check. `measured_slack` and `tolerance` belong to
/// the worst sub-check (largest excess relative to its tolerance), so
/// passed == (measured_slack <= tolerance). A failure within the solver noise
/// band of that sub-check is INCONCLUSIVE instead of FAIL.
struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  bool passed = true;
  double measured_slack = 0.0;
  double tolerance = 0.0;
  /// JSON of the worst instance (spaces in the space file format).
  std::string instance_summary;
  std::uint64_t seed = 0;
  std::string detail;
};

struct VerifyConfig {
  SolveConfig solver;
  double bracket_tol = kDefaultBracketTol;
  /// Extra band above a solver-based tolerance that still counts as noise.
  double noise_factor = 100.0;
};

namespace detail {

class Tally {
public:
  /// Records a sub-check that holds iff excess <= tol. Excess in
  /// (tol, tol + noise] is attributed to solver noise.
  void add(const std::string& label, double excess, double tol, double noise,
           const std::function<Json()>& instance = {}) {
    ++count_;
    const double score = (excess - tol) / (std::abs(tol) + 1e-15);
    if (!has_ || score > score_) {
      has_ = true;
      score_ = score;
      excess_ = excess;
      tol_ = tol;
      label_ = label;
      instance_ = instance ? instance() : Json::object();
    }
    if (excess > tol + noise) ++fails_;
    else if (excess > tol) ++noisy_;
  }

  void note(const std::string& s) {
    if (!notes_.empty()) notes_ += "; ";
    notes_ += s;
  }

  CheckReport report(const std::string& name, std::uint64_t seed) const {
    CheckReport r;
    r.name = name;
    r.seed = seed;
    r.measured_slack = has_ ? excess_ : 0.0;
    r.tolerance = has_ ? tol_ : 0.0;
    r.status = fails_ ? CheckStatus::Fail : noisy_ ? CheckStatus::Inconclusive : CheckStatus::Pass;
    r.passed = r.status == CheckStatus::Pass;
    r.instance_summary = instance_.dump();
    r.detail = std::to_string(count_) + " sub-checks, " + std::to_string(fails_) + " failed, " +
               std::to_string(noisy_) + " within noise; worst: " + label_;
    if (!notes_.empty()) r.detail += "; " + notes_;
    return r;
  }

private:
  bool has_ = false;
  double score_ = 0.0, excess_ = 0.0, tol_ = 0.0;
  std::string label_;
  Json instance_;
  std::string notes_;
  int count_ = 0, fails_ = 0, noisy_ = 0;
};

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline Json spaces_json(std::initializer_list<std::pair<const char*, const MMSpace*>> spaces) {
  Json j = Json::object();
  for (const auto& [name, s] : spaces) j[name] = space_to_json(*s);
  return j;
}

inline std::mt19937_64 check_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

template <class Rng>
MMSpace random_small_space(Rng& rng, int lo = 2, int hi = 4) {
  std::uniform_int_distribution<int> size(lo, hi);
  return random_space(static_cast<std::size_t>(size(rng)), rng);
}

inline double power_factor(double one_plus_eps, Exponent p) {
  return p.is_infinite() ? 1.0 : std::pow(one_plus_eps, 2.0 / p.value());
}

/// Composition of pi1 in S(mu_X, mu_Y) with pi2 in S(mu_Y, mu_Z) through Y,
/// reweighted by mu_Y over the two Y-marginals.
inline Matrix glue(const Matrix& pi1, const Matrix& pi2, const Vector& mu_y) {
  const Vector m1 = pi1.colwise().sum().transpose();
  const Vector m2 = pi2.rowwise().sum();
  Vector w(mu_y.size());
  for (Eigen::Index y = 0; y < mu_y.size(); ++y) w[y] = (m1[y] > 0 && m2[y] > 0) ? mu_y[y] / (m1[y] * m2[y]) : 0.0;
  return pi1 * w.asDiagonal() * pi2;
}

/// Restriction of `s` with weights `w` to the atoms where w > 0, renormalized.
inline MMSpace reweighted_support(const MMSpace& s, const Vector& w, double tol = 1e-15) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] > tol) keep.push_back(i);
  const auto k = static_cast<Eigen::Index>(keep.size());
  Matrix d(k, k);
  Vector v(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    v[a] = w[keep[a]];
    for (Eigen::Index b = 0; b < k; ++b) d(a, b) = s.dist()(keep[a], keep[b]);
  }
  return MMSpace(d, v / v.sum());
}

/// Optimal plan for W_p(a, b) on the metric d.
inline Matrix wasserstein_plan(const Vector& a, const Vector& b, const Matrix& d, Exponent p) {
  LinearOracleSpec s;
  s.cost = d.array().pow(p.value()).matrix();
  s.row_lower = s.row_upper = a;
  s.col_lower = s.col_upper = b * (a.sum() / b.sum());
  s.total = a.sum();
  return TransportLP().solve(s).coupling.matrix();
}

/// Y with an extra atom at distance `dist` from every point, carrying mass
/// alpha; the original weights are scaled by 1 - alpha.
inline MMSpace append_outlier(const MMSpace& y, double alpha, double dist) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Matrix d = Matrix::Constant(n + 1, n + 1, dist);
  d.topLeftCorner(n, n) = y.dist();
  d(n, n) = 0.0;
  Vector w(n + 1);
  w.head(n) = (1.0 - alpha) * y.weights();
  w[n] = alpha;
  return MMSpace(d, w);
}

inline void check_convergence_pair(Tally& t, const MMSpace& x, const MMSpace& y, Exponent p, int n_steps,
                                   double convergence_tol, const VerifyConfig& vc) {
  const auto& cfg = vc.solver;
  const double noise = vc.noise_factor * cfg.fw_tol;
  const auto gw = solve_gw(x, y, p, cfg);
  auto inst = [&] { return spaces_json({{"x", &x}, {"y", &y}}); };
  for (Family fam : {Family::Relaxed, Family::Symmetric}) {
    // Walk eps upward from the smallest value; each coupling stays feasible
    // for the next (larger) eps and seeds it.
    std::vector<double> values(static_cast<std::size_t>(n_steps) + 1);
    Matrix seed = gw.coupling.matrix();
    for (int n = n_steps; n >= 0; --n) {
      const double eps = std::ldexp(1.0, -n);
      SolveConfig c = cfg;
      c.warm_starts.push_back(seed);
      const auto params = fam == Family::Relaxed ? RelaxParams::relaxed(eps, eps) : RelaxParams::symmetric(eps, eps);
      const auto r = solve(x, y, params, p, c);
      values[static_cast<std::size_t>(n)] = r.value;
      seed = r.coupling.matrix();
    }
    const std::string tag = fam == Family::Relaxed ? "PGW" : "sPGW";
    for (int n = 0; n < n_steps; ++n)
      t.add(tag + " decrease from eps=2^-" + std::to_string(n) + " to 2^-" + std::to_string(n + 1),
            values[static_cast<std::size_t>(n)] - values[static_cast<std::size_t>(n) + 1], 2 * cfg.fw_tol, noise,
            inst);
    const double last = values.back();
    t.add(tag + " gap to GW at eps=2^-" + std::to_string(n_steps) + " (GW " + fmt(gw.value) + ", got " + fmt(last) +
              ")",
          std::abs(gw.value - last), convergence_tol, 0.0, inst);
  }
}

inline void check_triangle_triple(Tally& t, const MMSpace& x, const MMSpace& y, const MMSpace& z, double e1,
                                  double e2, Exponent p, const VerifyConfig& vc) {
  const auto& cfg = vc.solver;
  const auto xy = solve_spgw(x, y, e1, e2, p, cfg);
  const auto yz = solve_spgw(y, z, e1, e2, p, cfg);
  const double rhs = power_factor(1 + e2, p) * xy.value + power_factor(1 + e1, p) * yz.value;
  const double es = (1 + e1) * (1 + e2) - 1;
  SolveConfig c = cfg;
  c.warm_starts.push_back(glue(xy.coupling.matrix(), yz.coupling.matrix(), y.normalized().weights()));
  const double lhs = solve_spgw(x, z, es, es, p, c).value;
  t.add("relaxed triangle lhs " + fmt(lhs) + " vs rhs " + fmt(rhs), lhs - rhs, 3 * cfg.fw_tol,
        vc.noise_factor * cfg.fw_tol, [&] { return spaces_json({{"x", &x}, {"y", &y}, {"z", &z}}); });
}

} // namespace detail

/// The three-space counterexample to the plain triangle inequality for sPGW:
/// X one point, Y uniform on two points at distance 1, Z = (beta, 1 - beta)
/// on two points at distance 1, beta = 1/2 - delta.
inline CheckReport verify_counterexample(double delta, double eps2, Exponent p, const VerifyConfig& vc = {}) {
  if (p.is_infinite()) throw ParameterError("counterexample check needs finite p");
  if (!(delta > 0) || delta > 1.0 / 6.0 + 1e-15) throw ParameterError("delta must lie in (0, 1/6]");
  const double beta = 0.5 - delta;
  const double lo = delta / beta, hi = beta / (0.5 + delta);
  if (!(eps2 >= lo - 1e-12 && eps2 <= hi + 1e-12))
    throw ParameterError("eps2 must lie in the admissible interval [delta/(1/2-delta), (1/2-delta)/(1/2+delta)] = [" +
                         detail::fmt(lo) + ", " + detail::fmt(hi) + "]");
  const MMSpace x = one_point_space(), y = two_point_space(0.5, 0.5), z = two_point_space(beta, 1 - beta);
  const auto& cfg = vc.solver;
  const double pv = p.value();
  const double xz = solve_spgw(x, z, 0.0, eps2, p, cfg).value;
  const double yz = solve_spgw(y, z, 0.0, eps2, p, cfg).value;
  const double xy = solve_spgw(x, y, eps2, eps2, p, cfg).value;
  const double cf_xz = 2 * (0.5 + delta) * (0.5 + delta) * (1 + eps2) * ((0.5 - delta) / (0.5 + delta) - eps2);
  const double cf_xy = 0.5 * (1 - eps2 * eps2);
  const double xz_p = std::pow(xz, pv), xy_p = std::pow(xy, pv);

  detail::Tally t;
  auto inst = [&] {
    Json j = detail::spaces_json({{"x", &x}, {"y", &y}, {"z", &z}});
    j["delta"] = delta;
    j["eps2"] = eps2;
    j["p"] = p.to_string();
    return j;
  };
  t.add("sPGW(X,Z)^p = " + detail::fmt(xz_p) + " vs closed form " + detail::fmt(cf_xz), std::abs(xz_p - cf_xz), 1e-3,
        0.0, inst);
  t.add("sPGW(X,Y)^p = " + detail::fmt(xy_p) + " vs closed form " + detail::fmt(cf_xy), std::abs(xy_p - cf_xy), 1e-3,
        0.0, inst);
  t.add("sPGW(Y,Z) = " + detail::fmt(yz), yz, 1e-6, 0.0, inst);
  t.add("triangle violation margin " + detail::fmt(xy - xz - yz), xz + yz - xy, 0.0, 0.0, inst);
  t.note("sPGW(X,Z)^p=" + detail::fmt(xz_p) + " sPGW(X,Y)^p=" + detail::fmt(xy_p) + " sPGW(Y,Z)=" + detail::fmt(yz) +
         " closed forms " + detail::fmt(cf_xz) + ", " + detail::fmt(cf_xy));
  return t.report("counterexample(delta=" + detail::fmt(delta) + ",eps2=" + detail::fmt(eps2) + ",p=" + p.to_string() +
                      ")",
                  0);
}

/// PGW and sPGW at eps_n = 2^-n (n = 0..n_steps) rise monotonically to GW.
inline CheckReport verify_convergence(const MMSpace& x, const MMSpace& y, Exponent p, int n_steps,
                                      const VerifyConfig& vc = {}, double convergence_tol = 1e-2) {
  if (n_steps < 0) throw ParameterError("n_steps must be >= 0");
  detail::Tally t;
  detail::check_convergence_pair(t, x, y, p, n_steps, convergence_tol, vc);
  return t.report("convergence(p=" + p.to_string() + ",n_steps=" + std::to_string(n_steps) + ")", 0);
}

/// verify_convergence on `pairs` random n x n pairs.
inline CheckReport verify_convergence_random(int pairs, std::size_t n, Exponent p, int n_steps, std::uint64_t seed,
                                             const VerifyConfig& vc = {}, double convergence_tol = 1e-2) {
  auto rng = detail::check_rng(seed, 2);
  detail::Tally t;
  for (int i = 0; i < pairs; ++i) {
    const auto x = random_space(n, rng), y = random_space(n, rng);
    detail::check_convergence_pair(t, x, y, p, n_steps, convergence_tol, vc);
  }
  return t.report("convergence(random " + std::to_string(pairs) + " pairs " + std::to_string(n) + "x" +
                      std::to_string(n) + ",p=" + p.to_string() + ",n_steps=" + std::to_string(n_steps) + ")",
                  seed);
}

/// Relaxed triangle inequality on random triples of 2-4 point spaces.
inline CheckReport verify_approx_triangle(int trials, Exponent p, double eps1, double eps2, std::uint64_t seed,
                                          const VerifyConfig& vc = {}) {
  if (!std::isfinite(eps1) || !std::isfinite(eps2)) throw ParameterError("relaxed triangle check needs finite eps");
  auto rng = detail::check_rng(seed, 3);
  detail::Tally t;
  for (int i = 0; i < trials; ++i) {
    const auto x = detail::random_small_space(rng), y = detail::random_small_space(rng),
               z = detail::random_small_space(rng);
    detail::check_triangle_triple(t, x, y, z, eps1, eps2, p, vc);
  }
  return t.report("approx_triangle(trials=" + std::to_string(trials) + ",eps=(" + detail::fmt(eps1) + "," +
                      detail::fmt(eps2) + "),p=" + p.to_string() + ")",
                  seed);
}

/// Symmetry, identity on relabelings and triangle inequality of robust_pgw.
inline CheckReport verify_metric_axioms(int trials, double k, Exponent p, std::uint64_t seed,
                                        const VerifyConfig& vc = {}) {
  if (!(k > 0)) throw ParameterError("k must be > 0");
  auto rng = detail::check_rng(seed, 4);
  const double bt = vc.bracket_tol;
  detail::Tally t;
  auto d = [&](const MMSpace& a, const MMSpace& b) { return robust_pgw(a, b, k, p, vc.solver, bt).value; };
  for (int i = 0; i < trials; ++i) {
    const auto x = detail::random_small_space(rng), y = detail::random_small_space(rng),
               z = detail::random_small_space(rng);
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const MMSpace xr = relabel(x, perm);
    const double xy = d(x, y), yx = d(y, x), yz = d(y, z), xz = d(x, z), xx = d(x, xr);
    auto inst = [&] { return detail::spaces_json({{"x", &x}, {"y", &y}, {"z", &z}, {"x_relabeled", &xr}}); };
    t.add("symmetry |" + detail::fmt(xy) + " - " + detail::fmt(yx) + "|", std::abs(xy - yx), 2 * bt, bt, inst);
    t.add("identity on relabeling " + detail::fmt(xx), xx, bt, bt, inst);
    t.add("triangle " + detail::fmt(xz) + " <= " + detail::fmt(xy) + " + " + detail::fmt(yz), xz - xy - yz, 3 * bt,
          bt, inst);
  }
  return t.report("metric_axioms(trials=" + std::to_string(trials) + ",k=" + detail::fmt(k) + ",p=" + p.to_string() +
                      ")",
                  seed);
}

/// Upper bound k^-1 n^-1/p / (1 + k^-1 n^-1/p) for the robust distance between
/// the uniform n-simplex and the uniform nm-simplex.
inline double incompleteness_bound(std::size_t n, double k, Exponent p) {
  const double b = std::pow(static_cast<double>(n), -p.inverse()) / k;
  return b / (1 + b);
}

/// Robust distances between uniform simplices obey the Cauchy-type bound.
inline CheckReport verify_incompleteness(const std::vector<std::size_t>& n_list, std::size_t m, double k, Exponent p,
                                         const VerifyConfig& vc = {}) {
  if (m < 2) throw ParameterError("m must be >= 2");
  if (!(k > 0)) throw ParameterError("k must be > 0");
  constexpr std::size_t kCells = 512;
  for (std::size_t n : n_list) {
    if (n < 2) throw ParameterError("simplex sizes must be >= 2");
    if (n * n * m > kCells)
      throw ParameterError("instance too large: " + std::to_string(n) + " x " + std::to_string(n * m) + " exceeds " +
                           std::to_string(kCells) + " coupling cells");
  }
  const double bt = vc.bracket_tol;
  detail::Tally t;
  for (std::size_t n : n_list) {
    const MMSpace a = simplex_space(n), b = simplex_space(n * m);
    const double v = robust_pgw(a, b, k, p, vc.solver, bt).value;
    const double bound = incompleteness_bound(n, k, p);
    t.add("n=" + std::to_string(n) + ": " + detail::fmt(v) + " <= " + detail::fmt(bound), v - bound, bt, bt,
          [&] { return detail::spaces_json({{"x", &a}, {"y", &b}}); });
  }
  std::vector<std::size_t> sorted = n_list;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  double prev_route = kInf;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const std::size_t a = sorted[i], b = sorted[i + 1];
    // Both simplices sit inside the a*b simplex, so the triangle route bounds their distance.
    const double route = incompleteness_bound(a, k, p) + incompleteness_bound(b, k, p);
    if (a * b <= 16) {
      const MMSpace sa = simplex_space(a), sb = simplex_space(b);
      const double v = robust_pgw(sa, sb, k, p, vc.solver, bt).value;
      t.add("route bound for (" + std::to_string(a) + "," + std::to_string(b) + "): " + detail::fmt(v) + " <= " +
                detail::fmt(route),
            v - route, 3 * bt, bt, [&] { return detail::spaces_json({{"x", &sa}, {"y", &sb}}); });
    }
    t.add("route bound decreases at min size " + std::to_string(a), route - prev_route, 0.0, 0.0);
    prev_route = route;
  }
  std::string list;
  for (std::size_t n : n_list) list += (list.empty() ? "" : ",") + std::to_string(n);
  return t.report("incompleteness(n=[" + list + "],m=" + std::to_string(m) + ",k=" + detail::fmt(k) +
                      ",p=" + p.to_string() + ")",
                  0);
}

/// Two-point spaces X_n with weights (1 - 1/n, 1/n) against a point: GW_inf
/// stays 1 while the robust distance at p = inf is at most 1/n.
inline CheckReport verify_topology_separation(const std::vector<std::size_t>& n_list, double k,
                                              const VerifyConfig& vc = {}) {
  if (!(k > 0)) throw ParameterError("k must be > 0");
  SolveConfig cfg = vc.solver;
  cfg.p_inf_strategy = InfStrategy::Enumerate;
  const double bt = vc.bracket_tol;
  const MMSpace pt = one_point_space();
  detail::Tally t;
  for (std::size_t n : n_list) {
    if (n < 2) throw ParameterError("n must be >= 2");
    const double inv = 1.0 / static_cast<double>(n);
    const MMSpace xn = two_point_space(1.0 - inv, inv);
    auto inst = [&] { return detail::spaces_json({{"x", &xn}, {"y", &pt}}); };
    const double gw = solve_gw(xn, pt, Exponent::infinity(), cfg).value;
    t.add("n=" + std::to_string(n) + ": GW_inf = " + detail::fmt(gw), std::abs(gw - 1.0), 0.0, 0.0, inst);
    const double r = robust_pgw(xn, pt, k, Exponent::infinity(), cfg, bt).value;
    t.add("n=" + std::to_string(n) + ": robust " + detail::fmt(r) + " <= 1/n", r - inv, bt, bt, inst);
  }
  return t.report("topology_separation(k=" + detail::fmt(k) + ")", 0);
}

namespace detail {

inline void check_robustness_pair(Tally& t, const MMSpace& x, const MMSpace& y, const std::vector<double>& alphas,
                                  double dist, double k, Exponent p, const VerifyConfig& vc) {
  const double bt = vc.bracket_tol;
  const double base = robust_pgw(x, y, k, p, vc.solver, bt).value;
  const MMSpace yn = y.normalized();
  for (double alpha : alphas) {
    const MMSpace yt = append_outlier(yn, alpha, dist);
    require_valid(yt, true, "outlier space");
    auto inst = [&] {
      Json j = spaces_json({{"x", &x}, {"y", &yn}, {"y_outlier", &yt}});
      j["alpha"] = alpha;
      j["outlier_distance"] = dist;
      return j;
    };
    const double delta = alpha / (1 - alpha);
    // The identity plan on Y, with nothing sent to the outlier.
    const auto n = static_cast<Eigen::Index>(yn.size());
    Matrix pi = Matrix::Zero(n, n + 1);
    pi.leftCols(n) = yn.weights().asDiagonal();
    const Coupling c(pi);
    const auto member = check_membership(c, yn.weights(), yt.weights(), RelaxParams::relaxed(delta, delta));
    double infeasible = 0.0;
    for (const auto& v : member.violations) infeasible = std::max(infeasible, v.magnitude);
    const double dis = p.is_infinite() ? distortion_sup(yn, yt, pi) : dis_p(yn, yt, c, p);
    t.add("alpha=" + fmt(alpha) + ": explicit plan distortion " + fmt(dis), dis + infeasible, 1e-8, 0.0, inst);
    const double pert = robust_pgw(x, yt, k, p, vc.solver, bt).value;
    t.add("alpha=" + fmt(alpha) + ": |" + fmt(base) + " - " + fmt(pert) + "| <= " + fmt(delta),
          std::abs(base - pert) - delta, 2 * bt, bt, inst);
  }
}

inline void check_alphas(const std::vector<double>& alphas, double dist) {
  for (double a : alphas)
    if (!(a > 0) || a >= 0.5) throw ParameterError("outlier masses must lie in (0, 1/2)");
  if (!(dist > 0) || !std::isfinite(dist)) throw ParameterError("outlier distance must be a positive finite real");
}

} // namespace detail

/// Appending an outlier of mass alpha moves the robust distance by at most
/// alpha / (1 - alpha).
inline CheckReport verify_robustness(const MMSpace& x, const MMSpace& y, const std::vector<double>& alphas,
                                     double dist, double k, Exponent p, const VerifyConfig& vc = {}) {
  detail::check_alphas(alphas, dist);
  detail::Tally t;
  detail::check_robustness_pair(t, x, y, alphas, dist, k, p, vc);
  return t.report("robustness(D=" + detail::fmt(dist) + ",k=" + detail::fmt(k) + ",p=" + p.to_string() + ")", 0);
}

/// verify_robustness on random pairs, with outlier distances given as
/// multiples of diam(Y).
inline CheckReport verify_robustness_random(int pairs, const std::vector<double>& alphas,
                                            const std::vector<double>& diam_factors, double k, Exponent p,
                                            std::uint64_t seed, const VerifyConfig& vc = {}) {
  auto rng = detail::check_rng(seed, 7);
  detail::Tally t;
  for (int i = 0; i < pairs; ++i) {
    const auto x = detail::random_small_space(rng), y = detail::random_small_space(rng);
    for (double f : diam_factors) {
      const double dist = f * y.diameter();
      detail::check_alphas(alphas, dist);
      detail::check_robustness_pair(t, x, y, alphas, dist, k, p, vc);
    }
  }
  return t.report("robustness(random " + std::to_string(pairs) + " pairs,k=" + detail::fmt(k) +
                      ",p=" + p.to_string() + ")",
                  seed);
}

/// PGW (or sPGW with Family::Symmetric) equals GW between the
/// marginal-reweighted spaces of its optimal plan, and each reweighted space
/// stays within 2 2^(1/q) eps^(1/p) rad_p of the original.
inline CheckReport verify_nondegen_decomposition(int trials, double eps1, double eps2, Exponent p, std::uint64_t seed,
                                                 const VerifyConfig& vc = {}, Family family = Family::Relaxed) {
  if (family != Family::Relaxed && family != Family::Symmetric)
    throw ParameterError("decomposition check supports the relaxed and symmetric families");
  if (p.is_infinite()) throw ParameterError("decomposition check needs finite p");
  if (!std::isfinite(eps1) || !std::isfinite(eps2)) throw ParameterError("decomposition check needs finite eps");
  auto rng = detail::check_rng(seed, 8);
  const auto& cfg = vc.solver;
  const double noise = vc.noise_factor * cfg.fw_tol;
  const double pv = p.value();
  detail::Tally t;
  for (int i = 0; i < trials; ++i) {
    const auto x = detail::random_small_space(rng), y = detail::random_small_space(rng);
    auto inst = [&] { return detail::spaces_json({{"x", &x}, {"y", &y}}); };

    // Alternate between the two problems until neither improves the other:
    // a GW plan between the reweighted spaces is itself feasible for PGW.
    const RelaxParams params =
        family == Family::Relaxed ? RelaxParams::relaxed(eps1, eps2) : RelaxParams::symmetric(eps1, eps2);
    SolveConfig c = cfg;
    auto pgw = solve(x, y, params, p, c);
    double gw_pi = 0.0;
    MMSpace xp, yp;
    for (int round = 0; round < 4; ++round) {
      const Matrix& pi = pgw.coupling.matrix();
      const Vector a = pi.rowwise().sum(), b = pi.colwise().sum().transpose();
      std::vector<Eigen::Index> rows, cols;
      for (Eigen::Index r = 0; r < a.size(); ++r)
        if (a[r] > 1e-15) rows.push_back(r);
      for (Eigen::Index q = 0; q < b.size(); ++q)
        if (b[q] > 1e-15) cols.push_back(q);
      xp = detail::reweighted_support(x, a);
      yp = detail::reweighted_support(y, b);
      Matrix sub(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t q = 0; q < cols.size(); ++q)
          sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = pi(rows[r], cols[q]);
      SolveConfig cg = cfg;
      cg.warm_starts.push_back(sub / sub.sum());
      const auto gw = solve_gw(xp, yp, p, cg);
      gw_pi = gw.value;
      if (gw_pi >= pgw.value - 2 * cfg.fw_tol) break;
      Matrix lifted = Matrix::Zero(x.size(), y.size());
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t q = 0; q < cols.size(); ++q)
          lifted(rows[r], cols[q]) = gw.coupling(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q));
      c.warm_starts = {lifted};
      pgw = solve(x, y, params, p, c);
    }
    const std::string tag = family == Family::Relaxed ? "PGW " : "sPGW ";
    t.add(tag + detail::fmt(pgw.value) + " vs GW(X_pi,Y_pi) " + detail::fmt(gw_pi), std::abs(pgw.value - gw_pi),
          2 * cfg.fw_tol, noise, inst);

    auto radius_check = [&](const MMSpace& orig, const Vector& marg, double eps, const char* side) {
      const MMSpace full = orig.with_weights(marg);
      const MMSpace rw = detail::reweighted_support(orig, marg);
      std::vector<Eigen::Index> keep;
      for (Eigen::Index r = 0; r < marg.size(); ++r)
        if (marg[r] > 1e-15) keep.push_back(r);
      // The W_p-optimal plan certifies GW <= 2 W_p between the two weightings.
      const Matrix w_plan = detail::wasserstein_plan(full.weights() / full.weights().sum(), orig.weights(),
                                                        orig.dist(), p);
      Matrix warm(static_cast<Eigen::Index>(keep.size()), w_plan.cols());
      for (std::size_t r = 0; r < keep.size(); ++r) warm.row(static_cast<Eigen::Index>(r)) = w_plan.row(keep[r]);
      SolveConfig cg = cfg;
      cg.warm_starts.push_back(warm);
      const double gw = solve_gw(rw, orig, p, cg).value;
      const double bound = 2.0 * std::pow(2.0, 1.0 - 1.0 / pv) * std::pow(eps, 1.0 / pv) * circumradius(orig, p);
      t.add(std::string("GW(") + side + "_pi," + side + ") " + detail::fmt(gw) + " <= " + detail::fmt(bound),
            gw - bound, cfg.fw_tol, noise, inst);
    };
    radius_check(x, pgw.coupling.marg_x(), eps1, "X");
    radius_check(y, pgw.coupling.marg_y(), eps2, "Y");
  }
  return t.report(std::string("nondegen_decomposition(") + (family == Family::Relaxed ? "pgw" : "spgw") +
                      ",trials=" + std::to_string(trials) + ",eps=(" + detail::fmt(eps1) + "," +
                      detail::fmt(eps2) + "),p=" + p.to_string() + ")",
                  seed);
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"counterexample", "convergence", "triangle",  "metric",
                                              "incompleteness", "topology",    "robustness", "nondegen"};
  return names;
}

/// Runs one named suite (or "all") at its default parameters. Reports come
/// back in a fixed order, so a (suite, seed) pair reproduces bit-identically.
inline std::vector<CheckReport> run_suite(const std::string& suite, std::uint64_t seed, const VerifyConfig& vc = {}) {
  const auto& names = suite_names();
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
    throw ParameterError("unknown suite '" + suite + "'");
  std::vector<CheckReport> out;
  auto want = [&](const char* s) { return suite == "all" || suite == s; };
  const Exponent p1(1.0), p2(2.0);
  if (want("counterexample")) {
    out.push_back(verify_counterexample(0.1, 0.25, p2, vc));
    out.push_back(verify_counterexample(1.0 / 6.0, 0.5, p2, vc));
    out.push_back(verify_counterexample(0.05, 0.2, p2, vc));
  }
  if (want("convergence")) {
    out.push_back(verify_convergence(simplex_space(2), simplex_space(3), p2, 10, vc));
    out.push_back(verify_convergence(one_point_space(), simplex_space(2), p1, 10, vc));
    out.push_back(verify_convergence_random(10, 4, p2, 10, seed, vc));
  }
  if (want("triangle")) {
    out.push_back(verify_approx_triangle(100, p2, 0.5, 0.25, seed, vc));
    out.push_back(verify_approx_triangle(20, p2, 0.0, 0.0, seed, vc));
  }
  if (want("metric")) {
    out.push_back(verify_metric_axioms(100, 1.0, p1, seed, vc));
    out.push_back(verify_metric_axioms(100, 1.0, p2, seed, vc));
  }
  if (want("incompleteness"))
    for (double k : {1.0, 2.0})
      for (const auto& p : {p1, p2}) out.push_back(verify_incompleteness({2, 3, 4}, 2, k, p, vc));
  if (want("topology")) out.push_back(verify_topology_separation({2, 10, 100}, 1.0, vc));
  if (want("robustness")) out.push_back(verify_robustness_random(10, {0.05, 0.1, 0.25}, {1.0, 100.0}, 1.0, p2, seed, vc));
  if (want("nondegen")) {
    out.push_back(verify_nondegen_decomposition(20, 0.5, 0.5, p2, seed, vc));
    out.push_back(verify_nondegen_decomposition(20, 1.0, 0.25, p1, seed, vc));
    out.push_back(verify_nondegen_decomposition(20, 0.5, 0.5, p2, seed, vc, Family::Symmetric));
    out.push_back(verify_nondegen_decomposition(20, 1.0, 0.25, p1, seed, vc, Family::Symmetric));
  }
  return out;
}

} // namespace pgw
