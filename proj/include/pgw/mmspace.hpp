#pragma once

#include "pgw/common.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pgw {

inline constexpr double kTolMetric = 1e-9;
inline constexpr double kTolMass = 1e-12;

enum class ViolationCode {
  NonFiniteDistance,
  NegativeDistance,
  NonzeroDiagonal,
  AsymmetricDistance,
  TriangleInequality,
  NonFiniteWeight,
  NegativeWeight,
  ZeroTotalMass,
  MassNotOne,
  ZeroWeight,
  // coupling membership
  NegativeEntry,
  RowMarginalBelow,
  RowMarginalAbove,
  ColMarginalBelow,
  ColMarginalAbove,
  TotalMass,
};

inline const char* to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::NonFiniteDistance: return "NON_FINITE_DISTANCE";
    case ViolationCode::NegativeDistance: return "NEGATIVE_DISTANCE";
    case ViolationCode::NonzeroDiagonal: return "NONZERO_DIAGONAL";
    case ViolationCode::AsymmetricDistance: return "ASYMMETRIC_DISTANCE";
    case ViolationCode::TriangleInequality: return "TRIANGLE_INEQUALITY";
    case ViolationCode::NonFiniteWeight: return "NON_FINITE_WEIGHT";
    case ViolationCode::NegativeWeight: return "NEGATIVE_WEIGHT";
    case ViolationCode::ZeroTotalMass: return "ZERO_TOTAL_MASS";
    case ViolationCode::MassNotOne: return "MASS_NOT_ONE";
    case ViolationCode::ZeroWeight: return "ZERO_WEIGHT";
    case ViolationCode::NegativeEntry: return "NEGATIVE_ENTRY";
    case ViolationCode::RowMarginalBelow: return "ROW_MARGINAL_BELOW";
    case ViolationCode::RowMarginalAbove: return "ROW_MARGINAL_ABOVE";
    case ViolationCode::ColMarginalBelow: return "COL_MARGINAL_BELOW";
    case ViolationCode::ColMarginalAbove: return "COL_MARGINAL_ABOVE";
    case ViolationCode::TotalMass: return "TOTAL_MASS";
  }
  return "UNKNOWN";
}

struct Violation {
  ViolationCode code;
  std::vector<std::size_t> indices;  // worst offender
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationCode c) const {
    return std::any_of(violations.begin(), violations.end(),
                       [c](const Violation& v) { return v.code == c; });
  }
  const Violation* find(ViolationCode c) const {
    for (const auto& v : violations)
      if (v.code == c) return &v;
    return nullptr;
  }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) {
      if (!s.empty()) s += "; ";
      s += to_string(v.code);
      s += " at (";
      for (std::size_t k = 0; k < v.indices.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(v.indices[k]);
      }
      s += ") magnitude " + std::to_string(v.magnitude);
    }
    return s;
  }
};

/// Tracks the worst offender of one violation code while scanning.
class WorstOffender {
public:
  explicit WorstOffender(ViolationCode c) : code_(c) {}
  void offer(double magnitude, std::vector<std::size_t> idx) {
    if (!hit_ || magnitude > worst_.magnitude) {
      worst_ = {code_, std::move(idx), magnitude};
      hit_ = true;
    }
  }
  void flush(ValidationReport& r) const {
    if (hit_) r.violations.push_back(worst_);
  }

private:
  ViolationCode code_;
  Violation worst_{code_, {}, 0.0};
  bool hit_ = false;
};

/// Finite metric measure space: distance matrix, atom weights, optional labels.
///
/// The constructor checks shapes only. Metric and measure axioms are checked
/// by validate(), which reports rather than throws.
class MMSpace {
public:
  MMSpace() = default;
  MMSpace(Matrix dist, Vector weights, std::vector<std::string> labels = {})
      : dist_(std::move(dist)), weights_(std::move(weights)), labels_(std::move(labels)) {
    if (dist_.rows() != dist_.cols())
      throw StructuralError("distance matrix must be square, got " + std::to_string(dist_.rows()) +
                            "x" + std::to_string(dist_.cols()));
    if (dist_.rows() != weights_.size())
      throw StructuralError("distance matrix is " + std::to_string(dist_.rows()) +
                            "x" + std::to_string(dist_.cols()) + " but weight vector has " +
                            std::to_string(weights_.size()) + " entries");
    if (!labels_.empty() && labels_.size() != static_cast<std::size_t>(weights_.size()))
      throw StructuralError("label count does not match atom count");
  }

  std::size_t size() const { return static_cast<std::size_t>(weights_.size()); }
  const Matrix& dist() const { return dist_; }
  const Vector& weights() const { return weights_; }
  const std::vector<std::string>& labels() const { return labels_; }
  double total_mass() const { return weights_.sum(); }
  double diameter() const { return size() ? dist_.maxCoeff() : 0.0; }

  MMSpace with_weights(Vector w) const { return MMSpace(dist_, std::move(w), labels_); }
  MMSpace normalized() const {
    const double m = total_mass();
    if (!(m > 0)) throw ParameterError("cannot normalize a space with zero total mass");
    return with_weights(weights_ / m);
  }

  friend bool operator==(const MMSpace& a, const MMSpace& b) {
    return a.dist_ == b.dist_ && a.weights_ == b.weights_ && a.labels_ == b.labels_;
  }

private:
  Matrix dist_;
  Vector weights_;
  std::vector<std::string> labels_;
};

/// Checks every metric-measure axiom. With require_probability, also checks
/// unit total mass and full support.
inline ValidationReport validate(const MMSpace& s, bool require_probability) {
  ValidationReport r;
  const std::size_t n = s.size();
  const Matrix& d = s.dist();
  const Vector& w = s.weights();

  WorstOffender nonfinite(ViolationCode::NonFiniteDistance), negative(ViolationCode::NegativeDistance),
      diag(ViolationCode::NonzeroDiagonal), asym(ViolationCode::AsymmetricDistance),
      tri(ViolationCode::TriangleInequality);
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = d(i, j);
      if (!std::isfinite(x)) {
        nonfinite.offer(kInf, {i, j});
        finite = false;
        continue;
      }
      if (x < 0) negative.offer(-x, {i, j});
      if (i == j && x != 0) diag.offer(std::abs(x), {i, i});
      if (i < j && std::isfinite(d(j, i)) && d(i, j) != d(j, i))
        asym.offer(std::abs(d(i, j) - d(j, i)), {i, j});
    }
  }
  if (finite) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          const double excess = d(i, j) - d(i, k) - d(k, j);
          if (excess > kTolMetric) tri.offer(excess, {i, j, k});
        }
  }
  nonfinite.flush(r);
  negative.flush(r);
  diag.flush(r);
  asym.flush(r);
  tri.flush(r);

  WorstOffender wnonfinite(ViolationCode::NonFiniteWeight), wneg(ViolationCode::NegativeWeight),
      wzero(ViolationCode::ZeroWeight);
  bool weights_finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(w[i])) {
      wnonfinite.offer(kInf, {i});
      weights_finite = false;
    } else if (w[i] < 0) {
      wneg.offer(-w[i], {i});
    } else if (require_probability && w[i] == 0) {
      wzero.offer(0.0, {i});
    }
  }
  wnonfinite.flush(r);
  wneg.flush(r);
  wzero.flush(r);
  if (weights_finite) {
    const double total = w.sum();
    if (!(total > 0)) r.violations.push_back({ViolationCode::ZeroTotalMass, {}, total});
    else if (require_probability && std::abs(total - 1.0) > kTolMass)
      r.violations.push_back({ViolationCode::MassNotOne, {}, std::abs(total - 1.0)});
  }
  return r;
}

/// Throws ParameterError carrying the report summary when validation fails.
struct ValidationError : ParameterError {
  ValidationError(const std::string& what, ValidationReport rep)
      : ParameterError(what + ": " + rep.summary()), report(std::move(rep)) {}
  ValidationReport report;
};

inline void require_valid(const MMSpace& s, bool require_probability, const char* role = "space") {
  auto rep = validate(s, require_probability);
  if (!rep.ok()) throw ValidationError(std::string("invalid ") + role, std::move(rep));
}

/// Per-atom p-eccentricity: the L^p(mu) norm of d(x_i, .). For p = inf the
/// max is taken over the support of the weights.
inline Vector eccentricity(const MMSpace& s, Exponent p) {
  const std::size_t n = s.size();
  Vector e(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (p.is_infinite()) {
      double m = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (s.weights()[j] > 0) m = std::max(m, s.dist()(i, j));
      e[i] = m;
    } else {
      const double pv = p.value();
      CompensatedSum acc;
      for (std::size_t j = 0; j < n; ++j) acc.add(std::pow(s.dist()(i, j), pv) * s.weights()[j]);
      e[i] = std::pow(acc.value(), 1.0 / pv);
    }
  }
  return e;
}

inline double circumradius(const MMSpace& s, Exponent p) {
  if (s.size() == 0) return 0.0;
  return eccentricity(s, p).minCoeff();
}

/// Delta_n: n points at mutual distance one with the uniform measure.
inline MMSpace simplex_space(std::size_t n) {
  if (n == 0) throw ParameterError("simplex_space needs n >= 1");
  Matrix d = Matrix::Ones(n, n);
  d.diagonal().setZero();
  return MMSpace(std::move(d), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

/// Two atoms at distance `distance` with the given weights.
inline MMSpace two_point_space(double w0, double w1, double distance = 1.0) {
  Matrix d(2, 2);
  d << 0.0, distance, distance, 0.0;
  Vector w(2);
  w << w0, w1;
  return MMSpace(std::move(d), std::move(w));
}

inline MMSpace one_point_space(double weight = 1.0) {
  return MMSpace(Matrix::Zero(1, 1), Vector::Constant(1, weight));
}

/// New atom i is old atom perm[i].
inline MMSpace relabel(const MMSpace& s, const std::vector<std::size_t>& perm) {
  const std::size_t n = s.size();
  if (perm.size() != n) throw ParameterError("permutation length does not match space size");
  std::vector<bool> seen(n, false);
  for (auto k : perm) {
    if (k >= n || seen[k]) throw ParameterError("permutation is not a bijection");
    seen[k] = true;
  }
  Matrix d(n, n);
  Vector w(n);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = s.weights()[perm[i]];
    for (std::size_t j = 0; j < n; ++j) d(i, j) = s.dist()(perm[i], perm[j]);
    if (!s.labels().empty()) labels.push_back(s.labels()[perm[i]]);
  }
  return MMSpace(std::move(d), std::move(w), std::move(labels));
}

} // namespace pgw
