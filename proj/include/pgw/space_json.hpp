#pragma once

#include "pgw/common.hpp"
#include "pgw/mmspace.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace pgw {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Numbers are written in shortest round-trip form; infinities become the
/// strings "inf" / "-inf" since JSON has no native infinity.
inline Json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
  if (std::isnan(v)) return Json("nan");
  return Json(v);
}

inline double number_from_json(const Json& j, const std::string& field = "value") {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw FormatError("field '" + field + "' must be a number or \"inf\", got " + j.dump());
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v[i]));
  return out;
}

inline Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) throw FormatError("field '" + field + "' must be an array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array()) throw FormatError("row " + std::to_string(i) + " of '" + field + "' is not an array");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(n, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw FormatError("row " + std::to_string(i) + " of '" + field + "' has " + std::to_string(row.size()) +
                        " entries, expected " + std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = number_from_json(row[static_cast<std::size_t>(c)], field);
  }
  if (cols < 0) m.resize(0, 0);
  return m;
}

inline Vector vector_from_json(const Json& j, const std::string& field) {
  if (!j.is_array()) throw FormatError("field '" + field + "' must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number_from_json(j[i], field);
  return v;
}

/// {"schema_version", "labels"?, "distance_matrix", "weights"}.
inline Json space_to_json(const MMSpace& s) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  if (!s.labels().empty()) j["labels"] = s.labels();
  j["distance_matrix"] = matrix_to_json(s.dist());
  j["weights"] = vector_to_json(s.weights());
  return j;
}

} // namespace pgw
