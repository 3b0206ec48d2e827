#include "pgw/distortion.hpp"
#include "pgw/random_space.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pgw;

namespace {

Matrix random_coupling(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix pi(n, m);
  for (Eigen::Index i = 0; i < pi.rows(); ++i)
    for (Eigen::Index j = 0; j < pi.cols(); ++j) pi(i, j) = u(rng);
  return pi / pi.sum();
}

// Direct evaluation of sum |dX - dY|^p pi pi, no shared code with the library.
double naive_power(const MMSpace& x, const MMSpace& y, const Matrix& pi, double p) {
  double s = 0;
  for (Eigen::Index i = 0; i < pi.rows(); ++i)
    for (Eigen::Index j = 0; j < pi.cols(); ++j)
      for (Eigen::Index k = 0; k < pi.rows(); ++k)
        for (Eigen::Index l = 0; l < pi.cols(); ++l)
          s += std::pow(std::abs(x.dist()(i, k) - y.dist()(j, l)), p) * pi(i, j) * pi(k, l);
  return s;
}

} // namespace

TEST(Distortion, IdentityCouplingIsZero) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto s = random_space(1 + t % 5, rng);
    const auto diag = Coupling::diagonal(s.weights());
    for (const Exponent p : {Exponent(1.0), Exponent(2.0), Exponent(3.0), Exponent::infinity()})
      EXPECT_EQ(dis_p(s, s, diag, p), 0.0);
  }
}

TEST(Distortion, CounterexampleDiagonalIsZero) {
  const auto y = two_point_space(0.5, 0.5), z = two_point_space(0.4, 0.6);
  Vector half = Vector::Constant(2, 0.5);
  EXPECT_EQ(dis_p(y, z, Coupling::diagonal(half), Exponent(2.0)), 0.0);
}

TEST(Distortion, ProductOfTwoPointSimplexAtPOne) {
  const auto d2 = simplex_space(2);
  const auto prod = Coupling::product(d2.weights(), d2.weights());
  EXPECT_DOUBLE_EQ(dis_p(d2, d2, prod, Exponent(1.0)), 0.5);
}

TEST(Distortion, DimensionMismatch) {
  EXPECT_THROW(dis_p(simplex_space(2), simplex_space(3), Coupling::zero(2, 2), Exponent(2.0)), StructuralError);
}

TEST(Distortion, MatchesNaiveSum) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_space(1 + t % 4, rng), y = random_space(1 + (t / 4) % 4, rng);
    const Matrix pi = random_coupling(x.size(), y.size(), rng);
    for (double p : {1.0, 1.5, 2.0, 3.0}) {
      const double ref = naive_power(x, y, pi, p);
      EXPECT_NEAR(distortion_power(x, y, pi, p), ref, 1e-14);
      EXPECT_NEAR(DistortionKernel(x, y, Exponent(p)).quadratic(pi), ref, 1e-13);
    }
  }
}

TEST(Gradient, ZeroCouplingAndSinglePoint) {
  const auto x = simplex_space(3), y = simplex_space(2);
  EXPECT_EQ(dis_p_gradient(x, y, Coupling::zero(3, 2), Exponent(2.0)).cwiseAbs().maxCoeff(), 0.0);
  const auto one = one_point_space();
  EXPECT_EQ(dis_p_gradient(one, one, Coupling(Matrix::Constant(1, 1, 1.0)), Exponent(2.0))(0, 0), 0.0);
  EXPECT_THROW(dis_p_gradient(x, y, Coupling::zero(3, 2), Exponent::infinity()), ParameterError);
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_space(2 + t % 3, rng), y = random_space(2 + (t / 3) % 3, rng);
    const Matrix pi = random_coupling(x.size(), y.size(), rng);
    for (double p : {1.0, 2.0, 3.0}) {
      const Matrix g = dis_p_gradient(x, y, Coupling(pi), Exponent(p));
      const double h = 1e-6;
      double worst = 0;
      for (Eigen::Index i = 0; i < pi.rows(); ++i)
        for (Eigen::Index j = 0; j < pi.cols(); ++j) {
          Matrix a = pi, b = pi;
          a(i, j) += h;
          b(i, j) -= h;
          const double fd = (naive_power(x, y, a, p) - naive_power(x, y, b, p)) / (2 * h);
          worst = std::max(worst, std::abs(fd - g(i, j)));
        }
      EXPECT_LE(worst / g.cwiseAbs().maxCoeff(), 1e-6) << "trial " << t << " p " << p;
    }
  }
}

TEST(DistortionProperties, HomogeneityMonotonicityAndLimit) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> us(0.1, 3.0);
  for (int t = 0; t < 40; ++t) {
    const auto x = random_space(2 + t % 2, rng), y = random_space(2, rng);
    const Coupling c(random_coupling(x.size(), y.size(), rng));
    const double s = us(rng);
    for (double p : {1.0, 2.0, 3.0}) {
      const double base = dis_p(x, y, c, Exponent(p));
      EXPECT_NEAR(dis_p(x, y, scale(c, s), Exponent(p)), std::pow(s, 2.0 / p) * base, 1e-12 * (1 + base));
    }
    // Nondecreasing in p for a probability coupling.
    double prev = 0;
    for (double p : {1.0, 2.0, 4.0, 8.0, 32.0, 128.0}) {
      const double v = dis_p(x, y, c, Exponent(p));
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
    const double sup = dis_p(x, y, c, Exponent::infinity());
    EXPECT_LE(prev, sup + 1e-12);
    EXPECT_GE(dis_p(x, y, c, Exponent(128.0)), 0.95 * sup);
  }
}

TEST(Distortion, SupIgnoresNumericallyZeroMass) {
  const auto x = simplex_space(2), y = simplex_space(2);
  Matrix pi = Matrix::Zero(2, 2);
  pi(0, 0) = 0.5;
  pi(1, 1) = 0.5;
  pi(0, 1) = 1e-14;
  EXPECT_EQ(distortion_sup(x, y, pi), 0.0);
  pi(0, 1) = 1e-6;
  EXPECT_EQ(distortion_sup(x, y, pi), 1.0);
}
