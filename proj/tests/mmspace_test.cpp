#include "pgw/mmspace.hpp"
#include "pgw/random_space.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace pgw;

TEST(Validate, SimplexIsValidProbabilitySpace) {
  EXPECT_TRUE(validate(simplex_space(2), true).ok());
}

TEST(Validate, NegativeDistanceReported) {
  Matrix d(2, 2);
  d << 0, -0.1, -0.1, 0;
  const auto rep = validate(MMSpace(d, Vector::Constant(2, 0.5)), true);
  ASSERT_FALSE(rep.ok());
  const auto* v = rep.find(ViolationCode::NegativeDistance);
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(v->magnitude, 0.1, 1e-15);
}

TEST(Validate, MassNotOneMagnitude) {
  Vector w(2);
  w << 0.5, 0.6;
  const auto rep = validate(simplex_space(2).with_weights(w), true);
  const auto* v = rep.find(ViolationCode::MassNotOne);
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(v->magnitude, 0.1, 1e-12);
  EXPECT_TRUE(validate(simplex_space(2).with_weights(w), false).ok());
}

TEST(Validate, DimensionMismatchIsStructural) {
  EXPECT_THROW(MMSpace(Matrix::Zero(2, 2), Vector::Ones(3)), StructuralError);
  EXPECT_THROW(MMSpace(Matrix::Zero(2, 3), Vector::Ones(2)), StructuralError);
}

TEST(Validate, TriangleAndSymmetryAndZeroWeight) {
  Matrix d(3, 3);
  d << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  Vector w(3);
  w << 0.5, 0.5, 0.0;
  const MMSpace s(d, w);
  const auto strict = validate(s, true);
  EXPECT_TRUE(strict.has(ViolationCode::TriangleInequality));
  EXPECT_NEAR(strict.find(ViolationCode::TriangleInequality)->magnitude, 3.0, 1e-15);
  EXPECT_TRUE(strict.has(ViolationCode::ZeroWeight));
  // Zero-weight atoms are fine for general mm-spaces.
  EXPECT_FALSE(validate(s, false).has(ViolationCode::ZeroWeight));

  Matrix a(2, 2);
  a << 0, 1, 2, 0;
  EXPECT_TRUE(validate(MMSpace(a, Vector::Constant(2, 0.5)), true).has(ViolationCode::AsymmetricDistance));
}

TEST(Eccentricity, KnownValues) {
  EXPECT_EQ(eccentricity(one_point_space(), Exponent(3.0))[0], 0.0);
  EXPECT_EQ(eccentricity(one_point_space(), Exponent::infinity())[0], 0.0);
  const Vector e2 = eccentricity(simplex_space(2), Exponent(1.0));
  EXPECT_DOUBLE_EQ(e2[0], 0.5);
  EXPECT_DOUBLE_EQ(e2[1], 0.5);
  const Vector e3 = eccentricity(simplex_space(3), Exponent(2.0));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e3[i], std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Eccentricity, RejectsExponentBelowOne) { EXPECT_THROW(Exponent(0.5), ParameterError); }

TEST(Circumradius, KnownValues) {
  EXPECT_EQ(circumradius(one_point_space(), Exponent(2.0)), 0.0);
  EXPECT_DOUBLE_EQ(circumradius(simplex_space(2), Exponent(1.0)), 0.5);
  for (std::size_t n : {2, 3, 7}) EXPECT_EQ(circumradius(simplex_space(n), Exponent::infinity()), 1.0);
}

TEST(SimplexSpace, Construction) {
  EXPECT_THROW(simplex_space(0), ParameterError);
  const auto s1 = simplex_space(1);
  EXPECT_EQ(s1.size(), 1u);
  EXPECT_EQ(s1.weights()[0], 1.0);
  const auto s3 = simplex_space(3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(s3.weights()[i], 1.0 / 3.0);
    for (int j = 0; j < 3; ++j) EXPECT_EQ(s3.dist()(i, j), i == j ? 0.0 : 1.0);
  }
}

TEST(Relabel, IdentitySwapAndCycle) {
  const auto d2 = simplex_space(2);
  EXPECT_EQ(relabel(d2, {0, 1}), d2);
  EXPECT_EQ(relabel(d2, {1, 0}), d2);

  Matrix d(3, 3);
  d << 0, 1, 2, 1, 0, 1.5, 2, 1.5, 0;
  Vector w(3);
  w << 0.2, 0.3, 0.5;
  const MMSpace s(d, w);
  const auto r = relabel(s, {1, 2, 0});
  EXPECT_EQ(r.weights()[0], 0.3);
  EXPECT_EQ(r.weights()[1], 0.5);
  EXPECT_EQ(r.weights()[2], 0.2);
  EXPECT_EQ(r.dist()(0, 1), 1.5);  // old (1,2)
  EXPECT_EQ(r.dist()(0, 2), 1.0);  // old (1,0)
  EXPECT_EQ(r.dist()(1, 2), 2.0);  // old (2,0)

  EXPECT_THROW(relabel(s, {0, 0, 1}), ParameterError);
  EXPECT_THROW(relabel(s, {0, 1}), ParameterError);
}

TEST(MMSpaceProperties, RelabelInvariants) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const auto s = random_space(n, rng);
    ASSERT_TRUE(validate(s, true).ok()) << validate(s, true).summary();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto r = relabel(s, perm);
    EXPECT_TRUE(validate(r, true).ok());
    for (const Exponent p : {Exponent(1.0), Exponent(2.0), Exponent(3.5), Exponent::infinity()}) {
      const Vector e = eccentricity(s, p), er = eccentricity(r, p);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(er[i], e[perm[i]], 1e-14);
      EXPECT_NEAR(circumradius(r, p), circumradius(s, p), 1e-14);
    }
    // L^p monotonicity for probability measures.
    const Vector e1 = eccentricity(s, Exponent(1.0)), e2 = eccentricity(s, Exponent(2.0)),
                 e4 = eccentricity(s, Exponent(4.0)), einf = eccentricity(s, Exponent::infinity());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LE(e1[i], e2[i] + 1e-14);
      EXPECT_LE(e2[i], e4[i] + 1e-14);
      EXPECT_LE(e4[i], einf[i] + 1e-14);
    }
    EXPECT_LE(circumradius(s, Exponent(1.0)), circumradius(s, Exponent(2.0)) + 1e-14);
  }
}
