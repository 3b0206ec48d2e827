#pragma once

#include "pgw/common.hpp"
#include "pgw/coupling.hpp"
#include "pgw/mmspace.hpp"

#include <algorithm>
#include <optional>

namespace pgw {

inline constexpr double kTolSupport = 1e-12;

namespace detail {

inline void require_dims(const MMSpace& x, const MMSpace& y, const Matrix& m) {
  if (static_cast<std::size_t>(m.rows()) != x.size() || static_cast<std::size_t>(m.cols()) != y.size())
    throw StructuralError("coupling is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          " but spaces have " + std::to_string(x.size()) + " and " +
                          std::to_string(y.size()) + " atoms");
}

} // namespace detail

/// The quadratic form behind dis_p^p for finite p:
///   F(pi) = sum_{i,j,i',j'} |d_X(i,i') - d_Y(j,j')|^p pi(i,j) pi(i',j').
///
/// apply() computes (K pi)(i,j) = sum_{i',j'} |d_X(i,i') - d_Y(j,j')|^p pi(i',j')
/// for any real matrix (directions included). p = 2 uses the factored form
/// dX^2 a 1^T + 1 (dY^2 b)^T - 2 dX pi dY; other p contract directly against a
/// cached dense kernel when it fits, in a fixed summation order.
class DistortionKernel {
public:
  DistortionKernel(const MMSpace& x, const MMSpace& y, Exponent p)
      : dx_(x.dist()), dy_(y.dist()), p_(p) {
    if (p.is_infinite()) throw ParameterError("distortion kernel needs finite p; p = inf has a dedicated path");
    pv_ = p.value();
    n_ = dx_.rows();
    m_ = dy_.rows();
    if (pv_ == 2.0) {
      dx2_ = dx_.cwiseProduct(dx_);
      dy2_ = dy_.cwiseProduct(dy_);
    } else if (n_ * m_ <= kDenseLimit) {
      const Eigen::Index nm = n_ * m_;
      dense_.resize(nm, nm);
      for (Eigen::Index j2 = 0; j2 < m_; ++j2)
        for (Eigen::Index i2 = 0; i2 < n_; ++i2)
          for (Eigen::Index j = 0; j < m_; ++j)
            for (Eigen::Index i = 0; i < n_; ++i)
              dense_(i + n_ * j, i2 + n_ * j2) = std::pow(std::abs(dx_(i, i2) - dy_(j, j2)), pv_);
    }
  }

  Exponent exponent() const { return p_; }

  Matrix apply(const Matrix& pi) const {
    if (pv_ == 2.0) {
      const Vector a = pi.rowwise().sum();
      const Vector b = pi.colwise().sum().transpose();
      Matrix out = -2.0 * (dx_ * pi * dy_);
      out.colwise() += dx2_ * a;
      out.rowwise() += (dy2_ * b).transpose();
      return out;
    }
    if (dense_.size()) {
      const Eigen::Map<const Vector> v(pi.data(), pi.size());
      Vector kv = dense_ * v;
      return Eigen::Map<Matrix>(kv.data(), n_, m_);
    }
    Matrix out(n_, m_);
    for (Eigen::Index j = 0; j < m_; ++j)
      for (Eigen::Index i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (Eigen::Index j2 = 0; j2 < m_; ++j2)
          for (Eigen::Index i2 = 0; i2 < n_; ++i2) {
            const double w = pi(i2, j2);
            if (w != 0.0) acc += std::pow(std::abs(dx_(i, i2) - dy_(j, j2)), pv_) * w;
          }
        out(i, j) = acc;
      }
    return out;
  }

  /// F(pi) = <pi, K pi>.
  double quadratic(const Matrix& pi) const { return (pi.cwiseProduct(apply(pi))).sum(); }

private:
  static constexpr Eigen::Index kDenseLimit = 2048;
  Matrix dx_, dy_, dx2_, dy2_, dense_;
  Exponent p_;
  double pv_ = 2.0;
  Eigen::Index n_ = 0, m_ = 0;
};

/// dis_p(pi)^p for finite p by direct compensated summation.
inline double distortion_power(const MMSpace& x, const MMSpace& y, const Matrix& pi, double p) {
  detail::require_dims(x, y, pi);
  const Eigen::Index n = pi.rows(), m = pi.cols();
  CompensatedSum acc;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = pi(i, j);
      if (w == 0.0) continue;
      for (Eigen::Index j2 = 0; j2 < m; ++j2)
        for (Eigen::Index i2 = 0; i2 < n; ++i2) {
          const double w2 = pi(i2, j2);
          if (w2 == 0.0) continue;
          const double diff = std::abs(x.dist()(i, i2) - y.dist()(j, j2));
          if (diff == 0.0) continue;
          acc.add(std::pow(diff, p) * w * w2);
        }
    }
  return std::max(0.0, acc.value());
}

/// Sup of |d_X - d_Y| over pairs of cells whose mass exceeds tol_support.
inline double distortion_sup(const MMSpace& x, const MMSpace& y, const Matrix& pi,
                             double tol_support = kTolSupport) {
  detail::require_dims(x, y, pi);
  const Eigen::Index n = pi.rows(), m = pi.cols();
  double best = 0.0;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pi(i, j) <= tol_support) continue;
      for (Eigen::Index j2 = 0; j2 < m; ++j2)
        for (Eigen::Index i2 = 0; i2 < n; ++i2)
          if (pi(i2, j2) > tol_support)
            best = std::max(best, std::abs(x.dist()(i, i2) - y.dist()(j, j2)));
    }
  return best;
}

/// p-distortion ||d_X - d_Y||_{L^p(pi (x) pi)}.
inline double dis_p(const MMSpace& x, const MMSpace& y, const Coupling& c, Exponent p) {
  if (p.is_infinite()) return distortion_sup(x, y, c.matrix());
  return std::pow(distortion_power(x, y, c.matrix(), p.value()), 1.0 / p.value());
}

/// Gradient of dis_p^p at c: 2 K pi (K is symmetric).
inline Matrix dis_p_gradient(const MMSpace& x, const MMSpace& y, const Coupling& c, Exponent p) {
  if (p.is_infinite()) throw ParameterError("dis_p gradient is unsupported for p = inf");
  detail::require_dims(x, y, c.matrix());
  return 2.0 * DistortionKernel(x, y, p).apply(c.matrix());
}

} // namespace pgw
