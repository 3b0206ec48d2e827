#include "pgw/coupling.hpp"
#include "pgw/random_space.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pgw;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix random_coupling(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  Matrix pi(n, m);
  for (Eigen::Index i = 0; i < pi.rows(); ++i)
    for (Eigen::Index j = 0; j < pi.cols(); ++j) pi(i, j) = e(rng);
  return pi / pi.sum();
}

} // namespace

TEST(Marginals, Examples) {
  const auto prod = Coupling::product(vec({0.5, 0.5}), vec({0.5, 0.5}));
  auto [a, b] = marginals(prod);
  EXPECT_EQ(a, vec({0.5, 0.5}));
  EXPECT_EQ(b, vec({0.5, 0.5}));

  Matrix dirac = Matrix::Zero(2, 2);
  dirac(0, 0) = 1.0;
  auto [da, db] = marginals(Coupling(dirac));
  EXPECT_EQ(da, vec({1, 0}));
  EXPECT_EQ(db, vec({1, 0}));

  const auto diag = Coupling::diagonal(vec({0.5, 0.5}));
  EXPECT_EQ(diag.marg_x(), vec({0.5, 0.5}));
  EXPECT_EQ(diag.marg_y(), vec({0.5, 0.5}));
  EXPECT_EQ(diag.total(), 1.0);
}

TEST(Membership, ProductIsExact) {
  const auto mx = vec({0.2, 0.3, 0.5}), my = vec({0.6, 0.4});
  EXPECT_TRUE(check_membership(Coupling::product(mx, my), mx, my, RelaxParams::exact()).ok());
}

TEST(Membership, CounterexampleDiagonalIsSymmetricRelaxed) {
  // Y uniform, Z = (beta, 1 - beta) with beta = 0.4, eps = (0, 0.25).
  const auto diag = Coupling::diagonal(vec({0.5, 0.5}));
  const auto rep = check_membership(diag, vec({0.5, 0.5}), vec({0.4, 0.6}), RelaxParams::symmetric(0.0, 0.25));
  EXPECT_TRUE(rep.ok()) << rep.summary();
  // Slightly tighter eps2 breaks the upper bound 0.5 <= 1.25 * 0.4.
  EXPECT_FALSE(
      check_membership(diag, vec({0.5, 0.5}), vec({0.4, 0.6}), RelaxParams::symmetric(0.0, 0.2)).ok());
}

TEST(Membership, DiracViolatesRelaxedUpperBound) {
  Matrix dirac = Matrix::Zero(2, 2);
  dirac(0, 0) = 1.0;
  const auto rep = check_membership(Coupling(dirac), vec({0.5, 0.5}), vec({0.5, 0.5}), RelaxParams::relaxed(0.5, 0.5));
  const auto* v = rep.find(ViolationCode::RowMarginalAbove);
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(v->magnitude, 0.25, 1e-15);
  EXPECT_EQ(v->indices.at(0), 0u);
}

TEST(Membership, InfiniteEpsSkipsBound) {
  Matrix dirac = Matrix::Zero(2, 2);
  dirac(0, 0) = 1.0;
  EXPECT_TRUE(check_membership(Coupling(dirac), vec({0.5, 0.5}), vec({0.5, 0.5}), RelaxParams::relaxed(kInf, kInf)).ok());
  // Symmetric with eps = inf drops both box bounds on that side.
  EXPECT_TRUE(check_membership(Coupling(dirac), vec({0.5, 0.5}), vec({0.5, 0.5}), RelaxParams::symmetric(kInf, kInf)).ok());
  // Zero marginal on a charged atom fails the symmetric lower bound for finite eps.
  EXPECT_TRUE(check_membership(Coupling(dirac), vec({0.5, 0.5}), vec({0.5, 0.5}), RelaxParams::symmetric(1.0, 1.0))
                  .has(ViolationCode::RowMarginalBelow));
}

TEST(Membership, DimensionMismatch) {
  EXPECT_THROW(check_membership(Coupling::zero(2, 2), vec({1.0}), vec({0.5, 0.5}), RelaxParams::exact()),
               StructuralError);
}

TEST(Membership, RelaxedTotalMustBeOne) {
  const auto half = Coupling::product(vec({0.25, 0.25}), vec({1.0}));
  EXPECT_TRUE(check_membership(half, vec({0.5, 0.5}), vec({1.0}), RelaxParams::relaxed(1, 1)).has(ViolationCode::TotalMass));
}

TEST(Scale, Examples) {
  const auto c = Coupling::product(vec({0.5, 0.5}), vec({0.3, 0.7}));
  EXPECT_EQ(scale(c, 1.0).matrix(), c.matrix());
  EXPECT_EQ(scale(c, 0.0).total(), 0.0);
  EXPECT_THROW(scale(c, -1.0), ParameterError);
  const auto sub = scale(c, 0.4);
  EXPECT_NEAR(scale(sub, 1.0 / 0.4).total(), 1.0, 1e-15);
  EXPECT_NEAR(sub.marg_x()[0], 0.2, 1e-15);
}

TEST(Polytope, ZeroEpsCollapsesToExact) {
  const auto mx = vec({0.2, 0.3, 0.5}), my = vec({0.6, 0.4});
  const auto e = polytope(RelaxParams::exact(), mx, my);
  const auto r = polytope(RelaxParams::relaxed(0, 0), mx, my);
  const auto s = polytope(RelaxParams::symmetric(0, 0), mx, my);
  EXPECT_EQ(e.row_lower, r.row_lower);
  EXPECT_EQ(e.col_lower, r.col_lower);
  EXPECT_EQ(e.row_lower, s.row_lower);
  EXPECT_EQ(e.col_upper, s.col_upper);
}

TEST(MembershipProperties, NestingAndEquivalence) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 4, m = 1 + (trial / 4) % 4;
    const Matrix pi = random_coupling(n, m, rng);
    const Coupling c(pi);
    const Vector mx = c.marg_x(), my = c.marg_y();
    const double e1 = u(rng), e2 = u(rng);
    // Exact membership implies relaxed membership for all eps.
    ASSERT_TRUE(check_membership(c, mx, my, RelaxParams::exact()).ok());
    EXPECT_TRUE(check_membership(c, mx, my, RelaxParams::relaxed(e1, e2)).ok());

    // Symmetric implies relaxed, on perturbed targets.
    const auto sx = random_space(n, rng).weights(), sy = random_space(m, rng).weights();
    if (check_membership(c, sx, sy, RelaxParams::symmetric(e1, e2)).ok())
      EXPECT_TRUE(check_membership(c, sx, sy, RelaxParams::relaxed(e1, e2)).ok());

    // Mass-delta sub-couplings <-> relaxed couplings after scaling by 1/delta.
    const double delta = 0.1 + 0.8 * u(rng) / 2.0;
    const Vector tx = sx * (1.0 + u(rng)), ty = sy * (1.0 + u(rng));  // general masses m_X, m_Y >= delta
    const Coupling sub = scale(c, delta);
    const bool mass_ok = check_membership(sub, tx, ty, RelaxParams::mass(delta)).ok();
    const double mX = tx.sum(), mY = ty.sum();
    const bool rel_ok = check_membership(scale(sub, 1.0 / delta), tx / mX, ty / mY,
                                         RelaxParams::relaxed(mX / delta - 1.0, mY / delta - 1.0))
                            .ok();
    EXPECT_EQ(mass_ok, rel_ok);
  }
}
