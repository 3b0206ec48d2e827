#include "pgw/transport_lp.hpp"
#include "pgw/random_space.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <random>

using namespace pgw;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(v.size());
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

LinearOracleSpec spec_2x2(Matrix cost, Vector rl, Vector ru, Vector cl, Vector cu, double total) {
  LinearOracleSpec s;
  s.cost = std::move(cost);
  s.row_lower = std::move(rl);
  s.row_upper = std::move(ru);
  s.col_lower = std::move(cl);
  s.col_upper = std::move(cu);
  s.total = total;
  return s;
}

// Brute-force LP: enumerate every basic solution (nm linearly independent
// active constraints), keep the best feasible one.
double vertex_enumeration(const LinearOracleSpec& s) {
  const Eigen::Index n = s.cost.rows(), m = s.cost.cols(), nm = n * m;
  std::vector<Vector> rows;
  std::vector<double> rhs;
  auto cell = [&](Eigen::Index i, Eigen::Index j) { return i + n * j; };
  Vector ones = Vector::Ones(nm);
  // Equality first (always active).
  rows.push_back(ones);
  rhs.push_back(s.total);
  for (Eigen::Index k = 0; k < nm; ++k) {
    Vector e = Vector::Zero(nm);
    e[k] = 1;
    rows.push_back(e);
    rhs.push_back(0);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector r = Vector::Zero(nm);
    for (Eigen::Index j = 0; j < m; ++j) r[cell(i, j)] = 1;
    rows.push_back(r);
    rhs.push_back(s.row_lower[i]);
    if (std::isfinite(s.row_upper[i])) {
      rows.push_back(r);
      rhs.push_back(s.row_upper[i]);
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    Vector r = Vector::Zero(nm);
    for (Eigen::Index i = 0; i < n; ++i) r[cell(i, j)] = 1;
    rows.push_back(r);
    rhs.push_back(s.col_lower[j]);
    if (std::isfinite(s.col_upper[j])) {
      rows.push_back(r);
      rhs.push_back(s.col_upper[j]);
    }
  }
  const int k = static_cast<int>(rows.size()) - 1;
  double best = kInf;
  // choose nm-1 constraints among the inequalities (plus the equality)
  std::vector<int> pick(nm - 1);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == nm - 1) {
      Matrix a(nm, nm);
      Vector b(nm);
      a.row(0) = rows[0].transpose();
      b[0] = rhs[0];
      for (int d = 0; d < nm - 1; ++d) {
        a.row(d + 1) = rows[pick[d] + 1].transpose();
        b[d + 1] = rhs[pick[d] + 1];
      }
      Eigen::FullPivLU<Matrix> lu(a);
      if (lu.rank() < nm) return;
      const Vector x = lu.solve(b);
      if (x.minCoeff() < -1e-12) return;
      for (Eigen::Index i = 0; i < n; ++i) {
        double r = 0;
        for (Eigen::Index j = 0; j < m; ++j) r += x[cell(i, j)];
        if (r < s.row_lower[i] - 1e-12 || r > s.row_upper[i] + 1e-12) return;
      }
      for (Eigen::Index j = 0; j < m; ++j) {
        double c = 0;
        for (Eigen::Index i = 0; i < n; ++i) c += x[cell(i, j)];
        if (c < s.col_lower[j] - 1e-12 || c > s.col_upper[j] + 1e-12) return;
      }
      double obj = 0;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) obj += s.cost(i, j) * x[cell(i, j)];
      best = std::min(best, obj);
      return;
    }
    for (int c = start; c < k; ++c) {
      pick[depth] = c;
      rec(c + 1, depth + 1);
    }
  };
  if (nm == 1) {
    best = s.cost(0, 0) * s.total;
  } else {
    rec(0, 0);
  }
  return best;
}

} // namespace

TEST(Lmo, ExactReductionPicksDiagonal) {
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  const auto h = vec({0.5, 0.5});
  const auto res = TransportLP().solve(spec_2x2(c, h, h, h, h, 1.0));
  EXPECT_NEAR(res.objective, 0.0, 1e-15);
  EXPECT_NEAR(res.coupling(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(res.coupling(1, 1), 0.5, 1e-15);
  EXPECT_LT(res.certificate_residual, 1e-9);
}

TEST(Lmo, RelaxedUpperBoundsKeepDiagonal) {
  Matrix c(2, 2);
  c << 0, 1, 1, 0;
  const auto up = vec({0.75, 0.75}), z = vec({0, 0});
  const auto res = TransportLP().solve(spec_2x2(c, z, up, z, up, 1.0));
  EXPECT_NEAR(res.objective, 0.0, 1e-15);
  EXPECT_NEAR(res.coupling.marg_x().sum(), 1.0, 1e-15);
  EXPECT_LE(res.coupling.marg_x().maxCoeff(), 0.75 + 1e-15);
  EXPECT_NEAR(res.coupling(0, 1) + res.coupling(1, 0), 0.0, 1e-15);
}

TEST(Lmo, InfeasibleAggregateLowerBound) {
  Matrix c = Matrix::Zero(2, 2);
  const auto lo = vec({0.6, 0.6}), up = vec({kInf, kInf}), z = vec({0, 0});
  try {
    TransportLP().solve(spec_2x2(c, lo, up, z, up, 1.0));
    FAIL() << "expected infeasibility";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("row lower"), std::string::npos);
  }
}

TEST(Lmo, MaskedSupportInfeasible) {
  Matrix c = Matrix::Zero(2, 2);
  const auto h = vec({0.5, 0.5});
  auto s = spec_2x2(c, h, h, h, h, 1.0);
  s.allowed = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(2, 2, true);
  s.allowed(1, 0) = s.allowed(1, 1) = false;
  EXPECT_THROW(TransportLP().solve(s), InfeasibleError);
}

TEST(LmoProperties, MatchesVertexEnumerationAndIsFeasible) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ue(0.0, 1.5);
  int checked = 0;
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + t % 3, m = 1 + (t / 3) % 3;
    if (n * m > 6) continue;
    const auto mx = random_space(n, rng).weights(), my = random_space(m, rng).weights();
    Matrix cost(n, m);
    for (Eigen::Index i = 0; i < cost.rows(); ++i)
      for (Eigen::Index j = 0; j < cost.cols(); ++j) cost(i, j) = u(rng);
    RelaxParams params;
    switch (t % 4) {
      case 0: params = RelaxParams::exact(); break;
      case 1: params = RelaxParams::relaxed(ue(rng), ue(rng)); break;
      case 2: params = RelaxParams::symmetric(ue(rng), ue(rng)); break;
      case 3: params = RelaxParams::mass(0.9 * ue(rng) / 1.5); break;
    }
    const auto spec = LinearOracleSpec::from(polytope(params, mx, my), cost);
    const auto res = TransportLP().solve(spec);
    EXPECT_TRUE(check_membership(res.coupling, mx, my, params).ok()) << check_membership(res.coupling, mx, my, params).summary();
    EXPECT_LT(res.certificate_residual, 1e-9);
    EXPECT_NEAR(res.objective, vertex_enumeration(spec), 1e-10) << "trial " << t;
    ++checked;
  }
  EXPECT_GT(checked, 100);
}

TEST(Wasserstein, Examples) {
  const Matrix d = simplex_space(2).dist();
  EXPECT_NEAR(wasserstein_p(vec({0.3, 0.7}), vec({0.3, 0.7}), d, Exponent(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(wasserstein_p(vec({1, 0}), vec({0, 1}), d, Exponent(1.0)), 1.0, 1e-15);
  EXPECT_NEAR(wasserstein_p(vec({0.7, 0.3}), vec({0.5, 0.5}), d, Exponent(1.0)), 0.2, 1e-15);
  EXPECT_THROW(wasserstein_p(vec({0.7, 0.3}), vec({0.5, 0.6}), d, Exponent(1.0)), ParameterError);
}

TEST(WassersteinProperties, MetricAxioms) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + t % 5;
    const auto base = random_space(n, rng);
    const auto a = random_space(n, rng).weights(), b = random_space(n, rng).weights(),
               c = random_space(n, rng).weights();
    for (double p : {1.0, 2.0}) {
      const Exponent e(p);
      const double ab = wasserstein_p(a, b, base.dist(), e), ba = wasserstein_p(b, a, base.dist(), e);
      const double bc = wasserstein_p(b, c, base.dist(), e), ac = wasserstein_p(a, c, base.dist(), e);
      EXPECT_NEAR(ab, ba, 1e-12);
      EXPECT_LE(ac, ab + bc + 1e-9);
      EXPECT_NEAR(wasserstein_p(a, a, base.dist(), e), 0.0, 1e-12);
    }
  }
}
