#pragma once

#include "pgw/common.hpp"
#include "pgw/mmspace.hpp"

#include <string>

namespace pgw {

inline constexpr double kTolFeas = 1e-9;

/// Nonnegative transport plan on X x Y with cached marginals.
class Coupling {
public:
  Coupling() = default;
  explicit Coupling(Matrix m) : matrix_(std::move(m)) { refresh(); }

  static Coupling zero(std::size_t n, std::size_t m) { return Coupling(Matrix::Zero(n, m)); }
  static Coupling product(const Vector& a, const Vector& b) { return Coupling(a * b.transpose()); }
  static Coupling diagonal(const Vector& w) { return Coupling(Matrix(w.asDiagonal())); }

  std::size_t rows() const { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(matrix_.cols()); }
  const Matrix& matrix() const { return matrix_; }
  double operator()(std::size_t i, std::size_t j) const { return matrix_(i, j); }
  double total() const { return total_; }
  const Vector& marg_x() const { return marg_x_; }
  const Vector& marg_y() const { return marg_y_; }

  Coupling scaled(double s) const {
    if (!(s >= 0)) throw ParameterError("coupling scale factor must be nonnegative");
    return Coupling(matrix_ * s);
  }
  Coupling transposed() const { return Coupling(matrix_.transpose()); }

private:
  void refresh() {
    marg_x_ = matrix_.rowwise().sum();
    marg_y_ = matrix_.colwise().sum().transpose();
    CompensatedSum acc;
    for (Eigen::Index j = 0; j < matrix_.cols(); ++j)
      for (Eigen::Index i = 0; i < matrix_.rows(); ++i) acc.add(matrix_(i, j));
    total_ = acc.value();
  }

  Matrix matrix_;
  Vector marg_x_;
  Vector marg_y_;
  double total_ = 0.0;
};

inline std::pair<Vector, Vector> marginals(const Coupling& c) { return {c.marg_x(), c.marg_y()}; }

inline Coupling scale(const Coupling& c, double s) { return c.scaled(s); }

enum class Family { Exact, Relaxed, Symmetric, Mass };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Exact: return "exact";
    case Family::Relaxed: return "relaxed";
    case Family::Symmetric: return "symmetric";
    case Family::Mass: return "mass";
  }
  return "unknown";
}

/// Which relaxed coupling family, and its parameters. EXACT behaves like
/// RELAXED with eps = (0, 0).
struct RelaxParams {
  Family family = Family::Exact;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double delta = 0.0;

  static RelaxParams exact() { return {}; }
  static RelaxParams relaxed(double e1, double e2) { return checked({Family::Relaxed, e1, e2, 0.0}); }
  static RelaxParams symmetric(double e1, double e2) { return checked({Family::Symmetric, e1, e2, 0.0}); }
  static RelaxParams mass(double d) {
    if (!(d >= 0) || !std::isfinite(d)) throw ParameterError("mass delta must be a finite nonnegative real");
    return {Family::Mass, 0.0, 0.0, d};
  }

private:
  static RelaxParams checked(RelaxParams p) {
    if (!(p.eps1 >= 0) || !(p.eps2 >= 0)) throw ParameterError("relaxation eps must be >= 0");
    return p;
  }
};

/// Box-and-total description of a coupling family:
/// row_lower <= pi 1 <= row_upper, col_lower <= pi^T 1 <= col_upper,
/// sum(pi) = total, pi >= 0. Upper bounds may be +inf.
struct Polytope {
  Vector row_lower, row_upper, col_lower, col_upper;
  double total = 1.0;
};

namespace detail {

inline Vector upper_bound(const Vector& mu, double eps) {
  if (std::isinf(eps)) return Vector::Constant(mu.size(), kInf);
  return (1.0 + eps) * mu;
}

inline Vector lower_bound(const Vector& mu, double eps) {
  if (std::isinf(eps)) return Vector::Zero(mu.size());
  return mu / (1.0 + eps);
}

// A side whose upper bounds already sum to the total has lower == upper.
// Collapsing makes e.g. RELAXED(0,0) and EXACT produce identical polytopes.
inline void collapse_tight(Vector& lower, Vector& upper, double total) {
  if (!upper.allFinite()) return;
  const double s = upper.sum();
  if (std::abs(s - total) <= 1e-14 * std::max(1.0, total)) lower = upper;
}

} // namespace detail

inline Polytope polytope(const RelaxParams& params, const Vector& mu_x, const Vector& mu_y) {
  Polytope p;
  switch (params.family) {
    case Family::Exact:
      p.row_lower = p.row_upper = mu_x;
      p.col_lower = p.col_upper = mu_y;
      p.total = mu_x.sum();
      return p;
    case Family::Relaxed:
      p.row_lower = Vector::Zero(mu_x.size());
      p.col_lower = Vector::Zero(mu_y.size());
      p.row_upper = detail::upper_bound(mu_x, params.eps1);
      p.col_upper = detail::upper_bound(mu_y, params.eps2);
      p.total = 1.0;
      break;
    case Family::Symmetric:
      p.row_lower = detail::lower_bound(mu_x, params.eps1);
      p.col_lower = detail::lower_bound(mu_y, params.eps2);
      p.row_upper = detail::upper_bound(mu_x, params.eps1);
      p.col_upper = detail::upper_bound(mu_y, params.eps2);
      p.total = 1.0;
      break;
    case Family::Mass:
      p.row_lower = Vector::Zero(mu_x.size());
      p.col_lower = Vector::Zero(mu_y.size());
      p.row_upper = mu_x;
      p.col_upper = mu_y;
      p.total = params.delta;
      break;
  }
  detail::collapse_tight(p.row_lower, p.row_upper, p.total);
  detail::collapse_tight(p.col_lower, p.col_upper, p.total);
  return p;
}

/// Reports every per-atom bound and total-mass violation of `c` against the
/// family, each beyond kTolFeas. Infinite bounds are skipped.
inline ValidationReport check_membership(const Coupling& c, const Vector& mu_x, const Vector& mu_y,
                                         const RelaxParams& params, double tol = kTolFeas) {
  if (c.rows() != static_cast<std::size_t>(mu_x.size()) || c.cols() != static_cast<std::size_t>(mu_y.size()))
    throw StructuralError("coupling is " + std::to_string(c.rows()) + "x" + std::to_string(c.cols()) +
                          " but measures have sizes " + std::to_string(mu_x.size()) + " and " +
                          std::to_string(mu_y.size()));
  ValidationReport r;
  WorstOffender neg(ViolationCode::NegativeEntry);
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (c(i, j) < -tol) neg.offer(-c(i, j), {i, j});
  neg.flush(r);

  // Use the raw (uncollapsed) family bounds.
  Vector row_lower, row_upper, col_lower, col_upper;
  double total = 0.0;
  bool check_total = true;
  switch (params.family) {
    case Family::Exact:
      row_lower = row_upper = mu_x;
      col_lower = col_upper = mu_y;
      check_total = false;
      break;
    case Family::Relaxed:
      row_lower = Vector::Zero(mu_x.size());
      col_lower = Vector::Zero(mu_y.size());
      row_upper = detail::upper_bound(mu_x, params.eps1);
      col_upper = detail::upper_bound(mu_y, params.eps2);
      total = 1.0;
      break;
    case Family::Symmetric:
      row_lower = detail::lower_bound(mu_x, params.eps1);
      col_lower = detail::lower_bound(mu_y, params.eps2);
      row_upper = detail::upper_bound(mu_x, params.eps1);
      col_upper = detail::upper_bound(mu_y, params.eps2);
      total = 1.0;
      break;
    case Family::Mass:
      row_lower = Vector::Zero(mu_x.size());
      col_lower = Vector::Zero(mu_y.size());
      row_upper = mu_x;
      col_upper = mu_y;
      total = params.delta;
      break;
  }

  auto side = [&](const Vector& marg, const Vector& lo, const Vector& hi, ViolationCode below,
                  ViolationCode above) {
    WorstOffender wb(below), wa(above);
    for (Eigen::Index i = 0; i < marg.size(); ++i) {
      if (lo[i] - marg[i] > tol) wb.offer(lo[i] - marg[i], {static_cast<std::size_t>(i)});
      if (std::isfinite(hi[i]) && marg[i] - hi[i] > tol) wa.offer(marg[i] - hi[i], {static_cast<std::size_t>(i)});
    }
    wb.flush(r);
    wa.flush(r);
  };
  side(c.marg_x(), row_lower, row_upper, ViolationCode::RowMarginalBelow, ViolationCode::RowMarginalAbove);
  side(c.marg_y(), col_lower, col_upper, ViolationCode::ColMarginalBelow, ViolationCode::ColMarginalAbove);
  if (check_total && std::abs(c.total() - total) > tol)
    r.violations.push_back({ViolationCode::TotalMass, {}, std::abs(c.total() - total)});
  return r;
}

} // namespace pgw
