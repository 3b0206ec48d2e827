#include "pgw/verify.hpp"

#include <gtest/gtest.h>

using namespace pgw;

namespace {

constexpr double kBt = kDefaultBracketTol;

} // namespace

TEST(CheckTally, StatusBands) {
  detail::Tally pass;
  pass.add("a", 0.5, 1.0, 1.0);
  EXPECT_EQ(pass.report("t", 1).status, CheckStatus::Pass);
  EXPECT_TRUE(pass.report("t", 1).passed);

  detail::Tally noisy;
  noisy.add("a", 0.5, 1.0, 1.0);
  noisy.add("b", 1.5, 1.0, 1.0);
  const auto r = noisy.report("t", 2);
  EXPECT_EQ(r.status, CheckStatus::Inconclusive);
  EXPECT_FALSE(r.passed);
  EXPECT_DOUBLE_EQ(r.measured_slack, 1.5);
  EXPECT_DOUBLE_EQ(r.tolerance, 1.0);
  EXPECT_EQ(r.seed, 2u);

  detail::Tally fail;
  fail.add("a", 3.0, 1.0, 1.0);
  EXPECT_EQ(fail.report("t", 0).status, CheckStatus::Fail);
}

TEST(VerifyCounterexample, RejectsInadmissibleParameters) {
  EXPECT_THROW(verify_counterexample(0.1, 0.2, Exponent(2.0)), ParameterError);
  EXPECT_THROW(verify_counterexample(0.1, 0.7, Exponent(2.0)), ParameterError);
  EXPECT_THROW(verify_counterexample(0.2, 0.5, Exponent(2.0)), ParameterError);
  EXPECT_THROW(verify_counterexample(0.0, 0.2, Exponent(2.0)), ParameterError);
  try {
    verify_counterexample(0.1, 0.2, Exponent(2.0));
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("[0.25, 0.6666666667]"), std::string::npos);
  }
}

TEST(VerifyCounterexample, MeasuresTheSegmentMinimum) {
  // The stated closed forms drop the lower density bound; the measured
  // minima are 0.4352 and 0.48, so the closed-form sub-checks miss by 0.0602.
  const auto r = verify_counterexample(0.1, 0.25, Exponent(2.0));
  EXPECT_EQ(r.status, CheckStatus::Fail);
  EXPECT_NEAR(r.measured_slack, 0.4352 - 0.375, 1e-6);
  EXPECT_DOUBLE_EQ(r.tolerance, 1e-3);
  EXPECT_NE(r.detail.find("0.4352"), std::string::npos);
  EXPECT_NE(r.detail.find("0.48"), std::string::npos);
  // The triangle violation itself is present.
  EXPECT_NE(r.detail.find("2 failed"), std::string::npos);
  EXPECT_FALSE(Json::parse(r.instance_summary).empty());
}

TEST(VerifyConvergence, Examples) {
  const auto s = simplex_space(3);
  const auto same = verify_convergence(s, s, Exponent(2.0), 6);
  EXPECT_TRUE(same.passed);
  EXPECT_EQ(same.measured_slack, 0.0);
  EXPECT_TRUE(verify_convergence(simplex_space(2), simplex_space(3), Exponent(2.0), 10).passed);
  EXPECT_TRUE(verify_convergence(one_point_space(), simplex_space(2), Exponent(1.0), 10).passed);
  EXPECT_TRUE(verify_convergence_random(2, 3, Exponent(2.0), 8, 5).passed);
}

TEST(VerifyApproxTriangle, Examples) {
  EXPECT_TRUE(verify_approx_triangle(10, Exponent(2.0), 0.0, 0.0, 1).passed);
  const auto r = verify_approx_triangle(15, Exponent(2.0), 0.5, 0.25, 7);
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_EQ(r.seed, 7u);
  EXPECT_THROW(verify_approx_triangle(1, Exponent(2.0), kInf, 0.0, 1), ParameterError);
}

TEST(VerifyApproxTriangle, GluedPlanIsFeasibleForTheWidenedFamily) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_space(3, rng), y = random_space(2, rng), z = random_space(4, rng);
    const double e1 = 0.5, e2 = 0.25;
    const auto a = solve_spgw(x, y, e1, e2, Exponent(2.0)).coupling.matrix();
    const auto b = solve_spgw(y, z, e1, e2, Exponent(2.0)).coupling.matrix();
    const Coupling g(detail::glue(a, b, y.weights()));
    const double es = (1 + e1) * (1 + e2) - 1;
    EXPECT_TRUE(check_membership(g, x.weights(), z.weights(), RelaxParams::symmetric(es, es)).ok());
  }
}

TEST(VerifyMetricAxioms, Examples) {
  EXPECT_TRUE(verify_metric_axioms(5, 1.0, Exponent(2.0), 3).passed);
  EXPECT_GT(robust_pgw(simplex_space(2), simplex_space(3), 1.0, Exponent(1.0)).value, kBt);
  EXPECT_THROW(verify_metric_axioms(1, 0.0, Exponent(2.0), 3), ParameterError);
}

TEST(VerifyIncompleteness, Examples) {
  EXPECT_TRUE(verify_incompleteness({2}, 2, 1.0, Exponent(1.0)).passed);
  EXPECT_TRUE(verify_incompleteness({3}, 2, 1.0, Exponent(1.0)).passed);
  EXPECT_TRUE(verify_incompleteness({2}, 3, 2.0, Exponent(2.0)).passed);
  EXPECT_NEAR(incompleteness_bound(2, 1.0, Exponent(1.0)), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(incompleteness_bound(3, 1.0, Exponent(1.0)), 0.25, 1e-15);
  EXPECT_NEAR(incompleteness_bound(2, 2.0, Exponent(2.0)), 0.26120387496374, 1e-12);
  EXPECT_THROW(verify_incompleteness({50}, 2, 1.0, Exponent(1.0)), ParameterError);
  EXPECT_THROW(verify_incompleteness({1}, 2, 1.0, Exponent(1.0)), ParameterError);
  EXPECT_THROW(verify_incompleteness({2}, 1, 1.0, Exponent(1.0)), ParameterError);
}

TEST(VerifyTopology, Examples) {
  const auto r = verify_topology_separation({2, 10, 100}, 1.0);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(VerifyRobustness, Examples) {
  const auto y2 = simplex_space(2);
  EXPECT_TRUE(verify_robustness(simplex_space(3), y2, {0.1}, 100 * y2.diameter(), 1.0, Exponent(2.0)).passed);
  EXPECT_TRUE(verify_robustness(y2, y2, {0.25}, 10.0, 1.0, Exponent(2.0)).passed);
  EXPECT_THROW(verify_robustness(y2, y2, {0.5}, 10.0, 1.0, Exponent(2.0)), ParameterError);
  EXPECT_THROW(verify_robustness(y2, y2, {0.1}, -1.0, 1.0, Exponent(2.0)), ParameterError);
}

TEST(VerifyRobustness, OutlierConstruction) {
  const auto y = two_point_space(0.25, 0.75, 2.0);
  const auto yt = detail::append_outlier(y, 0.2, 5.0);
  EXPECT_TRUE(validate(yt, true).ok());
  EXPECT_DOUBLE_EQ(yt.weights()[2], 0.2);
  EXPECT_DOUBLE_EQ(yt.weights()[1], 0.6);
  EXPECT_DOUBLE_EQ(yt.dist()(0, 2), 5.0);
  EXPECT_DOUBLE_EQ(yt.dist()(0, 1), 2.0);
}

TEST(VerifyNondegen, Examples) {
  EXPECT_TRUE(verify_nondegen_decomposition(5, 0.0, 0.0, Exponent(2.0), 1).passed);
  EXPECT_TRUE(verify_nondegen_decomposition(10, 1.0, 0.25, Exponent(1.0), 11, {}, Family::Symmetric).passed);
  EXPECT_THROW(verify_nondegen_decomposition(1, 0.5, 0.5, Exponent::infinity(), 1), ParameterError);
}

TEST(VerifyNondegen, RelaxedRadiusEstimateHasCounterexamples) {
  // Light atoms can lose all their mass under a relaxed plan, which the
  // radius estimate does not account for.
  const auto r = verify_nondegen_decomposition(20, 1.0, 0.25, Exponent(1.0), 42);
  EXPECT_EQ(r.status, CheckStatus::Fail);
  EXPECT_NE(r.detail.find("_pi,"), std::string::npos);
}

TEST(RunSuite, DeterministicAndNamed) {
  const auto a = run_suite("topology", 42);
  const auto b = run_suite("topology", 42);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    EXPECT_EQ(a[i].measured_slack, b[i].measured_slack);
    EXPECT_EQ(a[i].detail, b[i].detail);
  }
  EXPECT_THROW(run_suite("bogus", 1), ParameterError);
}
