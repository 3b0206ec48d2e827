#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace pgw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. Each failure class maps to a distinct CLI exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inputs whose shapes do not fit together (not a data-quality problem).
struct StructuralError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct InfeasibleError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

/// Exponent p in [1, inf] with an explicit infinity marker.
class Exponent {
public:
  constexpr Exponent() = default;
  explicit Exponent(double p) : value_(p) {
    if (std::isinf(p) && p > 0) {
      infinite_ = true;
      value_ = 0.0;
    } else if (!(p >= 1.0)) {
      throw ParameterError("exponent p must lie in [1, inf], got " + std::to_string(p));
    }
  }
  static constexpr Exponent infinity() {
    Exponent e;
    e.infinite_ = true;
    e.value_ = 0.0;
    return e;
  }

  constexpr bool is_infinite() const { return infinite_; }
  /// Finite value; throws for p = inf.
  double value() const {
    if (infinite_) throw ParameterError("exponent is infinite");
    return value_;
  }
  /// Conjugate exponent q with 1/p + 1/q = 1 (q = inf for p = 1, q = 1 for p = inf).
  double conjugate() const {
    if (infinite_) return 1.0;
    if (value_ == 1.0) return kInf;
    return value_ / (value_ - 1.0);
  }
  /// 1/p, with 1/inf = 0.
  double inverse() const { return infinite_ ? 0.0 : 1.0 / value_; }

  std::string to_string() const;

  friend bool operator==(const Exponent& a, const Exponent& b) {
    return a.infinite_ == b.infinite_ && a.value_ == b.value_;
  }

private:
  double value_ = 2.0;
  bool infinite_ = false;
};

inline std::string Exponent::to_string() const {
  if (infinite_) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

} // namespace pgw
