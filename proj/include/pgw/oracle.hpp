#pragma once

#include "pgw/common.hpp"
#include "pgw/coupling.hpp"
#include "pgw/mmspace.hpp"

#include <functional>
#include <vector>

namespace pgw {

/// Instance cap (n*m) for brute_force_oracle.
inline constexpr std::size_t kOracleCap = 9;

/// Global minimum of dis_p over a coupling family for tiny instances, found
/// without any Frank-Wolfe or LP machinery.
///
/// The objective dis_p^p is a (possibly indefinite) quadratic form in the
/// coupling entries, and the feasible set is a polytope. A global minimizer
/// lies in the relative interior of some face and is stationary on that
/// face's affine hull, so it suffices to enumerate every active set of
/// inequality constraints (cell = 0, marginal at lower bound, marginal at
/// upper bound), solve the equality-constrained stationarity system on each,
/// and keep the best feasible candidate. Faces without a stationary point
/// (unbounded along the face) are covered by their boundary faces.
///
/// `resolution` sets the number of grid steps used to additionally scan
/// every edge between pairs of candidate points; it can only lower the
/// result, and is kept so the oracle degrades gracefully if a degenerate
/// face is mis-solved.
inline double brute_force_oracle(const MMSpace& x_in, const MMSpace& y_in, const RelaxParams& params, Exponent p,
                                 int resolution = 50) {
  if (p.is_infinite()) throw ParameterError("brute_force_oracle supports finite p only");
  if (resolution < 1) throw ParameterError("oracle resolution must be >= 1");
  const std::size_t n = x_in.size(), m = y_in.size(), nm = n * m;
  if (nm > kOracleCap)
    throw ParameterError("oracle instance too large: n*m = " + std::to_string(nm) + " > " + std::to_string(kOracleCap));

  const bool mass = params.family == Family::Mass;
  require_valid(x_in, !mass, "first space");
  require_valid(y_in, !mass, "second space");
  const MMSpace x = mass ? x_in : x_in.normalized();
  const MMSpace y = mass ? y_in : y_in.normalized();
  if (mass && params.delta == 0.0) return 0.0;

  // Bounds straight from the family definitions.
  const Vector& mx = x.weights();
  const Vector& my = y.weights();
  Vector rl(n), ru(n), cl(m), cu(m);
  double total = 1.0;
  auto up = [](double mu, double e) { return std::isinf(e) ? kInf : (1.0 + e) * mu; };
  auto lo = [](double mu, double e) { return std::isinf(e) ? 0.0 : mu / (1.0 + e); };
  for (std::size_t i = 0; i < n; ++i) {
    switch (params.family) {
      case Family::Exact: rl[i] = ru[i] = mx[i]; break;
      case Family::Relaxed: rl[i] = 0; ru[i] = up(mx[i], params.eps1); break;
      case Family::Symmetric: rl[i] = lo(mx[i], params.eps1); ru[i] = up(mx[i], params.eps1); break;
      case Family::Mass: rl[i] = 0; ru[i] = mx[i]; break;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    switch (params.family) {
      case Family::Exact: cl[j] = cu[j] = my[j]; break;
      case Family::Relaxed: cl[j] = 0; cu[j] = up(my[j], params.eps2); break;
      case Family::Symmetric: cl[j] = lo(my[j], params.eps2); cu[j] = up(my[j], params.eps2); break;
      case Family::Mass: cl[j] = 0; cu[j] = my[j]; break;
    }
  }
  if (params.family == Family::Mass) total = params.delta;
  if (params.family == Family::Exact) total = mx.sum();

  // Quadratic form Q over vec(pi) with index i + n*j.
  const double pv = p.value();
  Matrix q(nm, nm);
  for (std::size_t a = 0; a < nm; ++a)
    for (std::size_t b = 0; b < nm; ++b)
      q(a, b) = std::pow(std::abs(x.dist()(a % n, b % n) - y.dist()(a / n, b / n)), pv);

  auto objective = [&](const Vector& v) { return v.dot(q * v); };
  const double ftol = 1e-9;
  auto feasible = [&](const Vector& v) {
    if (v.minCoeff() < -ftol) return false;
    if (std::abs(v.sum() - total) > ftol) return false;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < m; ++j) s += v[i + n * j];
      if (s < rl[i] - ftol || s > ru[i] + ftol) return false;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) s += v[i + n * j];
      if (s < cl[j] - ftol || s > cu[j] + ftol) return false;
    }
    return true;
  };

  // Constraint rows: cell_k (e_k), row_i (sum over j), col_j (sum over i).
  auto row_vec = [&](std::size_t i) {
    Vector r = Vector::Zero(nm);
    for (std::size_t j = 0; j < m; ++j) r[i + n * j] = 1.0;
    return r;
  };
  auto col_vec = [&](std::size_t j) {
    Vector r = Vector::Zero(nm);
    for (std::size_t i = 0; i < n; ++i) r[i + n * j] = 1.0;
    return r;
  };

  // Per-marginal choice: 0 none, 1 at lower, 2 at upper. Equal bounds are
  // always active (as an equality).
  struct Side {
    Vector a;
    double lower, upper;
    bool fixed;
  };
  std::vector<Side> sides;
  for (std::size_t i = 0; i < n; ++i) sides.push_back({row_vec(i), rl[i], ru[i], rl[i] == ru[i]});
  for (std::size_t j = 0; j < m; ++j) sides.push_back({col_vec(j), cl[j], cu[j], cl[j] == cu[j]});

  double best = kInf;
  std::vector<Vector> candidates;
  std::vector<int> choice(sides.size(), 0);

  auto evaluate_face = [&](std::uint32_t zero_mask) {
    std::vector<Vector> rows;
    std::vector<double> rhs;
    Vector ones = Vector::Ones(nm);
    rows.push_back(ones);
    rhs.push_back(total);
    for (std::size_t k = 0; k < nm; ++k)
      if (zero_mask >> k & 1u) {
        Vector e = Vector::Zero(nm);
        e[k] = 1.0;
        rows.push_back(e);
        rhs.push_back(0.0);
      }
    for (std::size_t s = 0; s < sides.size(); ++s) {
      if (sides[s].fixed) {
        rows.push_back(sides[s].a);
        rhs.push_back(sides[s].lower);
      } else if (choice[s] == 1) {
        rows.push_back(sides[s].a);
        rhs.push_back(sides[s].lower);
      } else if (choice[s] == 2) {
        rows.push_back(sides[s].a);
        rhs.push_back(sides[s].upper);
      }
    }
    Matrix a(rows.size(), nm);
    Vector b(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      a.row(r) = rows[r].transpose();
      b[r] = rhs[r];
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    const Vector x0 = cod.solve(b);
    if ((a * x0 - b).norm() > 1e-10) return;  // inconsistent active set
    // Null space basis of A.
    Eigen::FullPivLU<Matrix> lu(a);
    const Matrix z = lu.kernel();
    Vector v = x0;
    if (lu.rank() < static_cast<Eigen::Index>(nm) && z.cols() > 0 && z.norm() > 0) {
      const Matrix h = z.transpose() * q * z;
      const Vector g = -(z.transpose() * q * x0);
      Eigen::CompleteOrthogonalDecomposition<Matrix> hs(h);
      const Vector yv = hs.solve(g);
      if ((h * yv - g).norm() > 1e-9 * (1.0 + g.norm())) return;  // no stationary point on this face
      v = x0 + z * yv;
    }
    if (!feasible(v)) return;
    const Vector vc = v.cwiseMax(0.0);
    const double f = objective(vc);
    if (f < best) best = f;
    candidates.push_back(vc);
  };

  std::function<void(std::size_t, std::uint32_t)> recurse_sides = [&](std::size_t s, std::uint32_t zero_mask) {
    if (s == sides.size()) {
      evaluate_face(zero_mask);
      return;
    }
    if (sides[s].fixed) {
      recurse_sides(s + 1, zero_mask);
      return;
    }
    choice[s] = 0;
    recurse_sides(s + 1, zero_mask);
    if (sides[s].lower > 0) {
      choice[s] = 1;
      recurse_sides(s + 1, zero_mask);
    }
    if (std::isfinite(sides[s].upper)) {
      choice[s] = 2;
      recurse_sides(s + 1, zero_mask);
    }
    choice[s] = 0;
  };
  for (std::uint32_t mask = 0; mask < (1u << nm); ++mask) recurse_sides(0, mask);

  // Edge scan between candidate points (segments of a convex set stay feasible).
  const std::size_t cap = std::min<std::size_t>(candidates.size(), 64);
  for (std::size_t a = 0; a < cap; ++a)
    for (std::size_t b = a + 1; b < cap; ++b)
      for (int t = 1; t < resolution; ++t) {
        const double s = static_cast<double>(t) / resolution;
        best = std::min(best, objective((1 - s) * candidates[a] + s * candidates[b]));
      }

  if (!std::isfinite(best)) throw InfeasibleError("oracle found no feasible coupling");
  return std::pow(std::max(0.0, best), 1.0 / pv);
}

} // namespace pgw
