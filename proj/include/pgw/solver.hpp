#pragma once

#include "pgw/common.hpp"
#include "pgw/coupling.hpp"
#include "pgw/distortion.hpp"
#include "pgw/mmspace.hpp"
#include "pgw/transport_lp.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

namespace pgw {

enum class InitStrategy { Product, RandomVertex, DiagonalGreedy };
enum class InfStrategy { LargeP, Enumerate };

struct SolveConfig {
  int restarts = 16;
  int max_iters = 500;
  double fw_tol = 1e-8;
  std::uint64_t seed = 0;
  InitStrategy init = InitStrategy::Product;
  InfStrategy p_inf_strategy = InfStrategy::LargeP;
  /// Extra starting couplings, each run as an additional restart after the
  /// regular ones. Infeasible entries are skipped.
  std::vector<Matrix> warm_starts;
  /// Worker threads for restarts; 0 or 1 runs sequentially.
  int threads = 1;

  void check() const {
    if (restarts < 1) throw ParameterError("restarts must be >= 1");
    if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
    if (!(fw_tol > 0)) throw ParameterError("fw_tol must be > 0");
  }
};

/// Surrogate exponent used by InfStrategy::LargeP.
inline constexpr double kLargeP = 128.0;
/// Instance cap (n*m) for exhaustive p = inf support enumeration.
inline constexpr std::size_t kEnumerateCap = 9;

struct SolveResult {
  double value = 0.0;
  Coupling coupling;
  int iterations = 0;
  int restarts_used = 0;
  int best_restart = 0;
  double feasibility_residual = 0.0;
  /// Always true: a feasible coupling certifies an upper bound only.
  bool is_upper_bound = true;
  RelaxParams params;
  Exponent p;
};

/// Largest bound violation of `pi` against `poly` (0 when feasible).
inline double feasibility_residual(const Matrix& pi, const Polytope& poly) {
  double r = std::max(0.0, -pi.minCoeff());
  const Vector a = pi.rowwise().sum();
  const Vector b = pi.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    r = std::max(r, poly.row_lower[i] - a[i]);
    if (std::isfinite(poly.row_upper[i])) r = std::max(r, a[i] - poly.row_upper[i]);
  }
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    r = std::max(r, poly.col_lower[j] - b[j]);
    if (std::isfinite(poly.col_upper[j])) r = std::max(r, b[j] - poly.col_upper[j]);
  }
  return std::max(r, std::abs(pi.sum() - poly.total));
}

namespace detail {

struct Problem {
  MMSpace x, y;
  RelaxParams params;
  Polytope poly;
  Vector target_x, target_y;  // feasible marginal pair used for PRODUCT / greedy inits
};

inline Problem make_problem(const MMSpace& x, const MMSpace& y, const RelaxParams& params) {
  Problem pr;
  pr.params = params;
  if (params.family == Family::Mass) {
    require_valid(x, false, "first space");
    require_valid(y, false, "second space");
    pr.x = x;
    pr.y = y;
    const double lim = std::min(x.total_mass(), y.total_mass());
    if (!(params.delta >= 0) || params.delta > lim * (1 + 1e-12))
      throw ParameterError("mass delta = " + std::to_string(params.delta) + " outside [0, min(m_X, m_Y)] = [0, " +
                           std::to_string(lim) + "]");
    pr.target_x = params.delta * x.weights() / x.total_mass();
    pr.target_y = params.delta * y.weights() / y.total_mass();
  } else {
    require_valid(x, true, "first space");
    require_valid(y, true, "second space");
    pr.x = x.normalized();
    pr.y = y.normalized();
    pr.target_x = pr.x.weights();
    pr.target_y = pr.y.weights();
  }
  pr.poly = polytope(params, pr.x.weights(), pr.y.weights());
  if (params.family == Family::Mass) pr.poly.total = params.delta;
  return pr;
}

inline std::mt19937_64 restart_rng(std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

// North-west corner rule on atoms sorted by eccentricity: couples the
// innermost atoms of X with the innermost atoms of Y.
inline Matrix greedy_diagonal(const Problem& pr) {
  const std::size_t n = pr.x.size(), m = pr.y.size();
  auto order = [](const MMSpace& s) {
    const MMSpace probe = s.total_mass() > 0 ? s.normalized() : s;
    const Vector e = eccentricity(probe, Exponent(2.0));
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return e[a] < e[b]; });
    return idx;
  };
  const auto ox = order(pr.x), oy = order(pr.y);
  Vector a = pr.target_x, b = pr.target_y;
  b *= (b.sum() > 0) ? a.sum() / b.sum() : 0.0;
  Matrix pi = Matrix::Zero(n, m);
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    const double t = std::min(a[ox[i]], b[oy[j]]);
    pi(ox[i], oy[j]) += t;
    a[ox[i]] -= t;
    b[oy[j]] -= t;
    if (a[ox[i]] <= 1e-15) ++i;
    else ++j;
  }
  return pi;
}

inline Matrix initial_point(const Problem& pr, InitStrategy kind, std::mt19937_64& rng, TransportLP& lp) {
  switch (kind) {
    case InitStrategy::Product: {
      const double t = pr.target_x.sum();
      if (t <= 0) return Matrix::Zero(pr.x.size(), pr.y.size());
      return pr.target_x * pr.target_y.transpose() / t;
    }
    case InitStrategy::DiagonalGreedy:
      return greedy_diagonal(pr);
    case InitStrategy::RandomVertex: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Matrix cost(pr.x.size(), pr.y.size());
      for (Eigen::Index j = 0; j < cost.cols(); ++j)
        for (Eigen::Index i = 0; i < cost.rows(); ++i) cost(i, j) = u(rng);
      return lp.solve(LinearOracleSpec::from(pr.poly, std::move(cost))).coupling.matrix();
    }
  }
  return {};
}

struct RunOutcome {
  Matrix pi;
  double objective = kInf;  // dis_p^p from the kernel (used for ranking within one run only)
  int iterations = 0;
};

// Away-step Frank-Wolfe on F(pi) = <pi, K pi> from a feasible start.
// The active set stores the start point plus every LMO vertex visited; the
// iterate is always their convex combination.
inline RunOutcome away_step_fw(const Problem& pr, const DistortionKernel& kernel, Matrix start,
                               const SolveConfig& cfg, TransportLP& lp) {
  std::vector<Matrix> atoms{std::move(start)};
  std::vector<double> alpha{1.0};
  Matrix x = atoms[0];
  RunOutcome out;
  LinearOracleSpec spec = LinearOracleSpec::from(pr.poly, Matrix());
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const Matrix g = 2.0 * kernel.apply(x);
    const double f = 0.5 * x.cwiseProduct(g).sum();
    spec.cost = g;
    Matrix s = lp.solve(spec).coupling.matrix();
    const double gx = x.cwiseProduct(g).sum();
    const double gap_fw = gx - s.cwiseProduct(g).sum();
    const double tol = cfg.fw_tol * std::max(f, 0.0) + 1e-13 * (1.0 + g.cwiseAbs().maxCoeff());
    if (gap_fw <= tol) break;

    std::size_t away = 0;
    double away_score = -kInf;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (alpha[k] <= 0) continue;
      const double sc = atoms[k].cwiseProduct(g).sum();
      if (sc > away_score) {
        away_score = sc;
        away = k;
      }
    }
    const double gap_away = away_score - gx;

    Matrix d;
    double gmax;
    bool fw_step = gap_fw >= gap_away || alpha[away] >= 1.0 - 1e-15;
    if (fw_step) {
      d = s - x;
      gmax = 1.0;
    } else {
      d = x - atoms[away];
      gmax = alpha[away] / (1.0 - alpha[away]);
    }
    const double slope = g.cwiseProduct(d).sum();
    const double curv = kernel.quadratic(d);
    double gamma = gmax;
    if (curv > 0) gamma = std::clamp(-slope / (2.0 * curv), 0.0, gmax);
    if (gamma <= 0) break;

    x += gamma * d;
    if (fw_step) {
      for (auto& a : alpha) a *= (1.0 - gamma);
      std::size_t hit = atoms.size();
      for (std::size_t k = 0; k < atoms.size(); ++k)
        if ((atoms[k] - s).cwiseAbs().maxCoeff() <= 1e-15) {
          hit = k;
          break;
        }
      if (hit == atoms.size()) {
        atoms.push_back(std::move(s));
        alpha.push_back(gamma);
      } else {
        alpha[hit] += gamma;
      }
    } else {
      for (auto& a : alpha) a *= (1.0 + gamma);
      alpha[away] -= gamma;
      if (gamma >= gmax || alpha[away] <= 1e-15) alpha[away] = 0.0;
    }
    // Compact the active set.
    std::size_t w = 0;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (alpha[k] <= 0) continue;
      if (w != k) {
        atoms[w] = std::move(atoms[k]);
        alpha[w] = alpha[k];
      }
      ++w;
    }
    atoms.resize(w);
    alpha.resize(w);
  }
  x = x.cwiseMax(0.0);
  out.objective = kernel.quadratic(x);
  out.pi = std::move(x);
  out.iterations = it;
  return out;
}

template <class Fn>
void for_each_index(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int r = 0; r < count; ++r) fn(r);
    return;
  }
  const int workers = std::min(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int r = w; r < count; r += workers) fn(r);
    });
  for (auto& t : pool) t.join();
}

struct Candidate {
  Matrix pi;
  double value = kInf;
  int iterations = 0;
};

inline std::vector<Matrix> feasible_warm_starts(const Problem& pr, const SolveConfig& cfg) {
  std::vector<Matrix> keep;
  for (const auto& w : cfg.warm_starts) {
    if (static_cast<std::size_t>(w.rows()) != pr.x.size() || static_cast<std::size_t>(w.cols()) != pr.y.size())
      continue;
    if (feasibility_residual(w, pr.poly) <= kTolFeas) keep.push_back(w.cwiseMax(0.0));
  }
  return keep;
}

inline SolveResult finish(const Problem& pr, std::vector<Candidate> cands, Exponent p) {
  SolveResult res;
  res.params = pr.params;
  res.p = p;
  res.restarts_used = static_cast<int>(cands.size());
  int best = 0;
  for (int r = 1; r < static_cast<int>(cands.size()); ++r)
    if (cands[r].value < cands[best].value) best = r;
  res.best_restart = best;
  res.value = cands[best].value;
  res.iterations = cands[best].iterations;
  res.feasibility_residual = feasibility_residual(cands[best].pi, pr.poly);
  res.coupling = Coupling(std::move(cands[best].pi));
  return res;
}

inline SolveResult solve_finite(const Problem& pr, Exponent p, Exponent report_p, const SolveConfig& cfg) {
  const DistortionKernel kernel(pr.x, pr.y, p);
  const auto warm = feasible_warm_starts(pr, cfg);
  const int total = cfg.restarts + static_cast<int>(warm.size());
  std::vector<Candidate> cands(total);
  for_each_index(total, cfg.threads, [&](int r) {
    TransportLP lp;
    auto rng = restart_rng(cfg.seed, r);
    Matrix start;
    if (r >= cfg.restarts) start = warm[r - cfg.restarts];
    else if (r == 0) start = initial_point(pr, cfg.init, rng, lp);
    else if (r == 1 && cfg.init != InitStrategy::DiagonalGreedy) start = initial_point(pr, InitStrategy::DiagonalGreedy, rng, lp);
    else start = initial_point(pr, InitStrategy::RandomVertex, rng, lp);
    auto run = away_step_fw(pr, kernel, std::move(start), cfg, lp);
    cands[r].value = dis_p(pr.x, pr.y, Coupling(run.pi), report_p);
    cands[r].iterations = run.iterations;
    cands[r].pi = std::move(run.pi);
  });
  return finish(pr, std::move(cands), report_p);
}

// Exact p = inf: the optimal value is the smallest threshold tau such that
// some coupling is supported on a set of cells whose pairwise distortions
// are all <= tau. Enumerates every support set, ordered by threshold, and
// tests LP feasibility of each.
inline SolveResult solve_enumerate(const Problem& pr) {
  const std::size_t n = pr.x.size(), m = pr.y.size(), nm = n * m;
  if (nm > kEnumerateCap)
    throw ParameterError("p = inf enumeration supports n*m <= " + std::to_string(kEnumerateCap) + ", got " +
                         std::to_string(nm));
  std::vector<std::pair<double, std::uint32_t>> sets;
  for (std::uint32_t mask = 1; mask < (1u << nm); ++mask) {
    double tau = 0.0;
    for (std::size_t a = 0; a < nm; ++a) {
      if (!(mask >> a & 1u)) continue;
      for (std::size_t b = a + 1; b < nm; ++b) {
        if (!(mask >> b & 1u)) continue;
        tau = std::max(tau, std::abs(pr.x.dist()(a % n, b % n) - pr.y.dist()(a / n, b / n)));
      }
    }
    sets.emplace_back(tau, mask);
  }
  std::stable_sort(sets.begin(), sets.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
  TransportLP lp;
  LinearOracleSpec spec = LinearOracleSpec::from(pr.poly, Matrix::Zero(n, m));
  spec.allowed.resize(n, m);
  for (const auto& [tau, mask] : sets) {
    for (std::size_t c = 0; c < nm; ++c) spec.allowed(c % n, c / n) = (mask >> c & 1u) != 0;
    try {
      Matrix pi = lp.solve(spec).coupling.matrix();
      std::vector<Candidate> one(1);
      one[0].value = distortion_sup(pr.x, pr.y, pi);
      one[0].pi = std::move(pi);
      return finish(pr, std::move(one), Exponent::infinity());
    } catch (const InfeasibleError&) {
    }
  }
  throw InfeasibleError("no feasible coupling found during p = inf enumeration");
}

} // namespace detail

/// Minimizes dis_p over the coupling family described by `params`.
/// The returned value is a certified upper bound (feasible coupling), not a
/// global optimality certificate, except for p = inf with Enumerate.
inline SolveResult solve(const MMSpace& x, const MMSpace& y, const RelaxParams& params, Exponent p,
                         const SolveConfig& cfg = {}) {
  cfg.check();
  const auto pr = detail::make_problem(x, y, params);
  if (params.family == Family::Mass && pr.poly.total == 0.0) {
    std::vector<detail::Candidate> one(1);
    one[0].pi = Matrix::Zero(pr.x.size(), pr.y.size());
    one[0].value = 0.0;
    return detail::finish(pr, std::move(one), p);
  }
  check_aggregate_feasibility(LinearOracleSpec::from(pr.poly, Matrix::Zero(pr.x.size(), pr.y.size())));
  if (!p.is_infinite()) return detail::solve_finite(pr, p, p, cfg);
  if (cfg.p_inf_strategy == InfStrategy::Enumerate) return detail::solve_enumerate(pr);
  return detail::solve_finite(pr, Exponent(kLargeP), Exponent::infinity(), cfg);
}

inline SolveResult solve_gw(const MMSpace& x, const MMSpace& y, Exponent p, const SolveConfig& cfg = {}) {
  return solve(x, y, RelaxParams::exact(), p, cfg);
}

inline SolveResult solve_pgw(const MMSpace& x, const MMSpace& y, double eps1, double eps2, Exponent p,
                             const SolveConfig& cfg = {}) {
  return solve(x, y, RelaxParams::relaxed(eps1, eps2), p, cfg);
}

inline SolveResult solve_spgw(const MMSpace& x, const MMSpace& y, double eps1, double eps2, Exponent p,
                              const SolveConfig& cfg = {}) {
  return solve(x, y, RelaxParams::symmetric(eps1, eps2), p, cfg);
}

inline SolveResult solve_mpgw(const MMSpace& x, const MMSpace& y, double delta, Exponent p,
                              const SolveConfig& cfg = {}) {
  return solve(x, y, RelaxParams::mass(delta), p, cfg);
}

} // namespace pgw
