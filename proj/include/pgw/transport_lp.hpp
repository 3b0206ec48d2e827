#pragma once

#include "pgw/common.hpp"
#include "pgw/coupling.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace pgw {

/// Linear program  min <cost, pi>  over
///   row_lower <= pi 1 <= row_upper,  col_lower <= pi^T 1 <= col_upper,
///   sum(pi) = total,  pi >= 0,  pi(i,j) = 0 where allowed(i,j) is false.
struct LinearOracleSpec {
  Matrix cost;
  Vector row_lower, row_upper, col_lower, col_upper;
  double total = 1.0;
  /// Optional support restriction; empty means every cell is allowed.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> allowed;

  static LinearOracleSpec from(const Polytope& poly, Matrix cost) {
    LinearOracleSpec s;
    s.cost = std::move(cost);
    s.row_lower = poly.row_lower;
    s.row_upper = poly.row_upper;
    s.col_lower = poly.col_lower;
    s.col_upper = poly.col_upper;
    s.total = poly.total;
    return s;
  }
};

struct LmoResult {
  Coupling coupling;
  double objective = 0.0;
  /// Largest violation of dual feasibility (negative reduced cost on a
  /// residual arc) under the certifying potentials. Optimal iff ~0.
  double certificate_residual = 0.0;
};

/// Checks the aggregate bounds of a spec; throws InfeasibleError naming the
/// first violated one.
inline void check_aggregate_feasibility(const LinearOracleSpec& s, double tol = 1e-12) {
  const auto n = s.cost.rows(), m = s.cost.cols();
  if (s.row_lower.size() != n || s.row_upper.size() != n || s.col_lower.size() != m || s.col_upper.size() != m)
    throw StructuralError("linear oracle bounds do not match the cost matrix shape");
  if (s.allowed.size() && (s.allowed.rows() != n || s.allowed.cols() != m))
    throw StructuralError("support mask does not match the cost matrix shape");
  const double slack = tol * std::max(1.0, std::abs(s.total));
  if (!(s.total >= 0) || !std::isfinite(s.total)) throw InfeasibleError("total mass must be finite and >= 0");
  for (Eigen::Index i = 0; i < n; ++i)
    if (s.row_lower[i] < 0 || s.row_lower[i] > s.row_upper[i] + slack)
      throw InfeasibleError("row " + std::to_string(i) + " has lower bound above upper bound");
  for (Eigen::Index j = 0; j < m; ++j)
    if (s.col_lower[j] < 0 || s.col_lower[j] > s.col_upper[j] + slack)
      throw InfeasibleError("column " + std::to_string(j) + " has lower bound above upper bound");
  if (s.row_lower.sum() > s.total + slack)
    throw InfeasibleError("sum of row lower bounds " + std::to_string(s.row_lower.sum()) + " exceeds total " +
                          std::to_string(s.total));
  if (s.col_lower.sum() > s.total + slack)
    throw InfeasibleError("sum of column lower bounds " + std::to_string(s.col_lower.sum()) + " exceeds total " +
                          std::to_string(s.total));
  if (s.row_upper.sum() < s.total - slack)
    throw InfeasibleError("sum of row upper bounds " + std::to_string(s.row_upper.sum()) + " is below total " +
                          std::to_string(s.total));
  if (s.col_upper.sum() < s.total - slack)
    throw InfeasibleError("sum of column upper bounds " + std::to_string(s.col_upper.sum()) +
                          " is below total " + std::to_string(s.total));
}

/// Exact solver for LinearOracleSpec problems.
///
/// The polytope is a bounded transshipment: s -> row_i -> col_j -> t with
/// node balances absorbing the lower bounds, fed from a super source. It is
/// solved by successive shortest paths (Dijkstra with reduced costs), then
/// certified by Bellman-Ford potentials on the final residual graph.
/// One instance per thread; scratch buffers are reused across solves.
class TransportLP {
public:
  LmoResult solve(const LinearOracleSpec& spec) {
    check_aggregate_feasibility(spec);
    build(spec);
    route(spec);
    LmoResult res;
    Matrix pi = Matrix::Zero(n_, m_);
    for (const auto& [e, i, j] : cell_arcs_) pi(i, j) = std::max(0.0, edges_[e].cap);
    res.objective = (pi.cwiseProduct(spec.cost)).sum();
    res.coupling = Coupling(std::move(pi));
    res.certificate_residual = certify();
    return res;
  }

private:
  struct Edge {
    int to;
    double cap;
    double cost;
  };

  int add_node() { adj_.emplace_back(); return static_cast<int>(adj_.size()) - 1; }
  int add_edge(int u, int v, double cap, double cost) {
    const int e = static_cast<int>(edges_.size());
    edges_.push_back({v, cap, cost});
    edges_.push_back({u, 0.0, -cost});
    adj_[u].push_back(e);
    adj_[v].push_back(e + 1);
    return e;
  }

  void build(const LinearOracleSpec& s) {
    n_ = s.cost.rows();
    m_ = s.cost.cols();
    edges_.clear();
    adj_.clear();
    cell_arcs_.clear();
    const double total = s.total;
    const double cmin = (n_ * m_ > 0) ? s.cost.minCoeff() : 0.0;
    if (!std::isfinite(cmin) || !std::isfinite(s.cost.maxCoeff()))
      throw ParameterError("linear oracle cost must be finite");

    super_source_ = add_node();
    super_sink_ = add_node();
    const int src = add_node();
    const int snk = add_node();
    std::vector<int> row(n_), col(m_);
    for (auto& r : row) r = add_node();
    for (auto& c : col) c = add_node();

    std::vector<double> supply(adj_.size(), 0.0);
    supply[src] = total - s.row_lower.sum();
    supply[snk] = -(total - s.col_lower.sum());
    for (Eigen::Index i = 0; i < n_; ++i) {
      const double cap = std::min(s.row_upper[i] - s.row_lower[i], total);
      add_edge(src, row[i], std::max(0.0, cap), 0.0);
      supply[row[i]] += s.row_lower[i];
    }
    for (Eigen::Index j = 0; j < m_; ++j) {
      const double cap = std::min(s.col_upper[j] - s.col_lower[j], total);
      add_edge(col[j], snk, std::max(0.0, cap), 0.0);
      supply[col[j]] -= s.col_lower[j];
    }
    for (Eigen::Index j = 0; j < m_; ++j)
      for (Eigen::Index i = 0; i < n_; ++i) {
        if (s.allowed.size() && !s.allowed(i, j)) continue;
        const int e = add_edge(row[i], col[j], total, s.cost(i, j) - cmin);
        cell_arcs_.push_back({e + 1, static_cast<int>(i), static_cast<int>(j)});
      }
    demand_ = 0.0;
    for (std::size_t v = 0; v < supply.size(); ++v) {
      if (supply[v] > 0) {
        add_edge(super_source_, static_cast<int>(v), supply[v], 0.0);
        demand_ += supply[v];
      } else if (supply[v] < 0) {
        add_edge(static_cast<int>(v), super_sink_, -supply[v], 0.0);
      }
    }
  }

  void route(const LinearOracleSpec& s) {
    const int V = static_cast<int>(adj_.size());
    std::vector<double> pot(V, 0.0), dist(V);
    std::vector<int> prev_edge(V);
    std::vector<char> done(V);
    const double eps_cap = 1e-15 * std::max(1.0, s.total);
    double remaining = demand_;
    const double finish_tol = 1e-13 * std::max(1.0, s.total);
    std::size_t guard = 0;
    const std::size_t max_rounds = 64 * (edges_.size() + static_cast<std::size_t>(V)) + 64;
    while (remaining > finish_tol) {
      if (++guard > max_rounds) throw InfeasibleError("transport solver failed to converge");
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      std::fill(prev_edge.begin(), prev_edge.end(), -1);
      dist[super_source_] = 0.0;
      for (;;) {
        int u = -1;
        double best = kInf;
        for (int v = 0; v < V; ++v)
          if (!done[v] && dist[v] < best) {
            best = dist[v];
            u = v;
          }
        if (u < 0) break;
        done[u] = 1;
        for (int e : adj_[u]) {
          const Edge& ed = edges_[e];
          if (ed.cap <= eps_cap) continue;
          const double rc = ed.cost + pot[u] - pot[ed.to];
          const double nd = dist[u] + std::max(0.0, rc);
          if (nd < dist[ed.to]) {
            dist[ed.to] = nd;
            prev_edge[ed.to] = e;
          }
        }
      }
      if (!std::isfinite(dist[super_sink_])) {
        if (remaining <= 1e-11 * std::max(1.0, s.total)) break;
        throw InfeasibleError("no coupling satisfies the marginal bounds on the allowed support");
      }
      const double dmax = dist[super_sink_];
      for (int v = 0; v < V; ++v) pot[v] += std::min(dist[v], dmax);
      double push = remaining;
      for (int v = super_sink_; v != super_source_; v = edges_[prev_edge[v] ^ 1].to)
        push = std::min(push, edges_[prev_edge[v]].cap);
      for (int v = super_sink_; v != super_source_; v = edges_[prev_edge[v] ^ 1].to) {
        edges_[prev_edge[v]].cap -= push;
        edges_[prev_edge[v] ^ 1].cap += push;
      }
      remaining -= push;
    }
  }

  // Bellman-Ford from a virtual root on the residual graph; returns the most
  // negative reduced cost left after |V| rounds (0 when no negative cycle).
  double certify() const {
    const int V = static_cast<int>(adj_.size());
    std::vector<double> pot(V, 0.0);
    const double eps_cap = 1e-13;
    for (int round = 0; round < V; ++round) {
      bool changed = false;
      for (int u = 0; u < V; ++u)
        for (int e : adj_[u]) {
          const Edge& ed = edges_[e];
          if (ed.cap <= eps_cap) continue;
          if (pot[u] + ed.cost < pot[ed.to] - 1e-14) {
            pot[ed.to] = pot[u] + ed.cost;
            changed = true;
          }
        }
      if (!changed) break;
    }
    double worst = 0.0;
    for (int u = 0; u < V; ++u)
      for (int e : adj_[u]) {
        const Edge& ed = edges_[e];
        if (ed.cap <= eps_cap) continue;
        worst = std::max(worst, pot[ed.to] - (pot[u] + ed.cost));
      }
    return worst;
  }

  struct CellArc {
    int reverse_edge;
    int i, j;
  };

  Eigen::Index n_ = 0, m_ = 0;
  int super_source_ = 0, super_sink_ = 1;
  double demand_ = 0.0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<CellArc> cell_arcs_;
};

/// Exact minimizer of <cost, pi> over the spec's polytope.
inline Coupling lmo(const LinearOracleSpec& spec) {
  TransportLP lp;
  return lp.solve(spec).coupling;
}

/// Exact Wasserstein-p distance between two probability vectors on a common
/// finite metric d.
inline double wasserstein_p(const Vector& mu, const Vector& nu, const Matrix& d, Exponent p) {
  if (p.is_infinite()) throw ParameterError("wasserstein_p supports finite p only");
  if (mu.size() != nu.size() || d.rows() != mu.size() || d.cols() != mu.size())
    throw StructuralError("wasserstein_p: measures and metric have inconsistent sizes");
  if (std::abs(mu.sum() - nu.sum()) > kTolMass || std::abs(mu.sum() - 1.0) > kTolMass)
    throw ParameterError("wasserstein_p: measures must both be probability vectors (mass mismatch " +
                         std::to_string(std::abs(mu.sum() - nu.sum())) + ")");
  LinearOracleSpec s;
  s.cost = d.array().abs().pow(p.value()).matrix();
  s.row_lower = s.row_upper = mu;
  s.col_lower = s.col_upper = nu;
  s.total = mu.sum();
  // Absorb rounding differences between the two totals.
  s.col_lower *= s.total / nu.sum();
  s.col_upper = s.col_lower;
  const auto res = TransportLP().solve(s);
  return std::pow(std::max(0.0, res.objective), 1.0 / p.value());
}

} // namespace pgw
