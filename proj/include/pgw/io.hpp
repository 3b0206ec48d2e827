#pragma once

#include "pgw/common.hpp"
#include "pgw/coupling.hpp"
#include "pgw/mmspace.hpp"
#include "pgw/robust.hpp"
#include "pgw/solver.hpp"
#include "pgw/space_json.hpp"
#include "pgw/verify.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace pgw {

enum class FileFormat { Json, Csv };
enum class PointMetric { Precomputed, Euclidean, L1, Linf };

inline const char* to_string(PointMetric m) {
  switch (m) {
    case PointMetric::Precomputed: return "precomputed";
    case PointMetric::Euclidean: return "euclidean";
    case PointMetric::L1: return "l1";
    case PointMetric::Linf: return "linf";
  }
  return "?";
}

inline PointMetric parse_metric(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "precomputed") return PointMetric::Precomputed;
  if (s == "euclidean") return PointMetric::Euclidean;
  if (s == "l1") return PointMetric::L1;
  if (s == "linf") return PointMetric::Linf;
  throw FormatError("unknown metric '" + s + "' (expected precomputed, euclidean, l1 or linf)");
}

/// Where and how a space is stored.
///
/// JSON files hold either "distance_matrix" or "points" plus "weights".
/// CSV input is a headerless grid at `path` (a square distance matrix for
/// the precomputed metric, one point per row otherwise) and an optional
/// single-column `weights_path`; without it the weights are uniform.
struct SpaceFile {
  FileFormat format = FileFormat::Json;
  std::string path;
  std::optional<PointMetric> metric;
  std::string weights_path;

  /// Picks the format from the extension (".csv" means CSV, anything else JSON).
  static SpaceFile from_path(const std::string& path) {
    SpaceFile f;
    f.path = path;
    const auto dot = path.rfind('.');
    if (dot != std::string::npos) {
      std::string ext = path.substr(dot + 1);
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (ext == "csv") f.format = FileFormat::Csv;
    }
    return f;
  }
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed while reading '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed while writing '" + path + "'");
}

inline Json parse_json(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    const auto last_nl = text.rfind('\n', pos == 0 ? 0 : pos - 1);
    const std::size_t col = (last_nl == std::string::npos || pos == 0) ? pos + 1 : pos - last_nl;
    throw FormatError(origin + ": JSON parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + e.what());
  }
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

/// Headerless numeric CSV grid; blank lines are skipped.
inline std::vector<std::vector<double>> read_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0, col = 1;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE)
        throw FormatError(path + ": line " + std::to_string(lineno) + ", column " + std::to_string(col) +
                          ": cannot parse '" + cell + "' as a number");
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
      ++col;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(path + ": line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                        " columns, expected " + std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix grid_to_matrix(const std::vector<std::vector<double>>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n ? static_cast<Eigen::Index>(rows.front().size()) : 0;
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

inline Matrix point_distances(const Matrix& pts, PointMetric metric) {
  const Eigen::Index n = pts.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto diff = (pts.row(i) - pts.row(j)).array().abs();
      double v = 0.0;
      switch (metric) {
        case PointMetric::Euclidean: v = std::sqrt((diff * diff).sum()); break;
        case PointMetric::L1: v = diff.sum(); break;
        case PointMetric::Linf: v = diff.size() ? diff.maxCoeff() : 0.0; break;
        case PointMetric::Precomputed: break;
      }
      d(i, j) = d(j, i) = v;
    }
  return d;
}

inline Matrix require_square(Matrix d, const std::string& origin) {
  if (d.rows() != d.cols())
    throw FormatError(origin + ": precomputed distance matrix must be square, got " + std::to_string(d.rows()) + "x" +
                      std::to_string(d.cols()));
  return d;
}

inline MMSpace space_from_json(const Json& j, std::optional<PointMetric> metric_override, const std::string& origin) {
  if (!j.is_object()) throw FormatError(origin + ": space file must hold a JSON object");
  const bool has_matrix = j.contains("distance_matrix");
  const bool has_points = j.contains("points");
  if (has_matrix == has_points)
    throw FormatError(origin + ": exactly one of 'distance_matrix' and 'points' is required");
  PointMetric metric = has_matrix ? PointMetric::Precomputed : PointMetric::Euclidean;
  if (j.contains("metric")) {
    if (!j["metric"].is_string()) throw FormatError(origin + ": 'metric' must be a string");
    metric = parse_metric(j["metric"].get<std::string>());
  }
  if (metric_override) metric = *metric_override;
  Matrix d;
  if (has_matrix) {
    if (metric != PointMetric::Precomputed)
      throw FormatError(origin + ": 'distance_matrix' requires the precomputed metric");
    d = require_square(matrix_from_json(j["distance_matrix"], "distance_matrix"), origin);
  } else {
    if (metric == PointMetric::Precomputed)
      throw FormatError(origin + ": the precomputed metric requires 'distance_matrix', not 'points'");
    d = point_distances(matrix_from_json(j["points"], "points"), metric);
  }
  Vector w = j.contains("weights") ? vector_from_json(j["weights"], "weights")
                                   : Vector::Constant(d.rows(), d.rows() ? 1.0 / static_cast<double>(d.rows()) : 0.0);
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) throw FormatError(origin + ": 'labels' must be an array of strings");
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) throw FormatError(origin + ": 'labels' must be an array of strings");
      labels.push_back(l.get<std::string>());
    }
  }
  try {
    return MMSpace(std::move(d), std::move(w), std::move(labels));
  } catch (const StructuralError& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

inline MMSpace space_from_csv(const SpaceFile& f) {
  const PointMetric metric = f.metric.value_or(PointMetric::Precomputed);
  const Matrix grid = grid_to_matrix(read_csv(f.path));
  Matrix d = metric == PointMetric::Precomputed ? require_square(grid, f.path) : point_distances(grid, metric);
  Vector w;
  if (f.weights_path.empty()) {
    w = Vector::Constant(d.rows(), d.rows() ? 1.0 / static_cast<double>(d.rows()) : 0.0);
  } else {
    const auto rows = read_csv(f.weights_path);
    if (!rows.empty() && rows.front().size() != 1)
      throw FormatError(f.weights_path + ": weight file must have a single column");
    w.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) w[static_cast<Eigen::Index>(i)] = rows[i][0];
  }
  try {
    return MMSpace(std::move(d), std::move(w));
  } catch (const StructuralError& e) {
    throw FormatError(f.path + ": " + e.what());
  }
}

} // namespace detail

/// Loads and validates a space; with `normalize` the weights are divided by
/// their sum first. Metric violations raise ValidationError.
inline MMSpace load_space(const SpaceFile& file, bool normalize = false) {
  MMSpace s = file.format == FileFormat::Csv
                  ? detail::space_from_csv(file)
                  : detail::space_from_json(detail::parse_json(detail::read_file(file.path), file.path), file.metric,
                                            file.path);
  if (normalize) {
    const double m = s.total_mass();
    if (m > 0 && std::isfinite(m)) s = s.normalized();
  }
  require_valid(s, false, file.path.c_str());
  return s;
}

inline MMSpace load_space(const std::string& path, bool normalize = false) {
  return load_space(SpaceFile::from_path(path), normalize);
}

inline void save_space(const MMSpace& s, const std::string& path) {
  detail::write_file(path, space_to_json(s).dump(2) + "\n");
}

// ---- coupling ----

inline Json to_json(const Coupling& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "coupling";
  j["matrix"] = matrix_to_json(c.matrix());
  return j;
}

inline Coupling coupling_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("matrix")) throw FormatError("coupling JSON needs a 'matrix' field");
  return Coupling(matrix_from_json(j["matrix"], "matrix"));
}

// ---- shared pieces ----

namespace detail {

inline Json exponent_to_json(const Exponent& p) { return p.is_infinite() ? Json("inf") : Json(p.value()); }

inline Exponent exponent_from_json(const Json& j) {
  const double v = number_from_json(j, "p");
  return std::isinf(v) ? Exponent::infinity() : Exponent(v);
}

inline Family family_from_string(const std::string& s) {
  for (Family f : {Family::Exact, Family::Relaxed, Family::Symmetric, Family::Mass})
    if (s == to_string(f)) return f;
  throw FormatError("unknown coupling family '" + s + "'");
}

inline const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw FormatError(std::string("missing field '") + name + "'");
  return j.at(name);
}

inline void check_schema(const Json& j, const char* type) {
  if (!j.is_object()) throw FormatError(std::string("expected a JSON object for ") + type);
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw FormatError(std::string(type) + " is missing an integer schema_version");
  if (j["schema_version"].get<int>() > kSchemaVersion)
    throw FormatError(std::string(type) + " has schema_version " + std::to_string(j["schema_version"].get<int>()) +
                      ", newer than supported " + std::to_string(kSchemaVersion));
  if (j.contains("type") && j["type"] != type)
    throw FormatError(std::string("expected type '") + type + "', got " + j["type"].dump());
}

} // namespace detail

// ---- SolveResult ----

inline Json to_json(const SolveResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "solve_result";
  j["value"] = number_to_json(r.value);
  j["p"] = detail::exponent_to_json(r.p);
  j["params"] = {{"family", to_string(r.params.family)},
                 {"eps1", number_to_json(r.params.eps1)},
                 {"eps2", number_to_json(r.params.eps2)},
                 {"delta", number_to_json(r.params.delta)}};
  j["iterations"] = r.iterations;
  j["restarts_used"] = r.restarts_used;
  j["best_restart"] = r.best_restart;
  j["feasibility_residual"] = number_to_json(r.feasibility_residual);
  j["is_upper_bound"] = r.is_upper_bound;
  j["coupling"] = matrix_to_json(r.coupling.matrix());
  return j;
}

inline SolveResult solve_result_from_json(const Json& j) {
  detail::check_schema(j, "solve_result");
  SolveResult r;
  r.value = number_from_json(detail::field(j, "value"), "value");
  r.p = detail::exponent_from_json(detail::field(j, "p"));
  const Json& pj = detail::field(j, "params");
  r.params.family = detail::family_from_string(detail::field(pj, "family").get<std::string>());
  r.params.eps1 = number_from_json(detail::field(pj, "eps1"), "eps1");
  r.params.eps2 = number_from_json(detail::field(pj, "eps2"), "eps2");
  r.params.delta = number_from_json(detail::field(pj, "delta"), "delta");
  r.iterations = detail::field(j, "iterations").get<int>();
  r.restarts_used = detail::field(j, "restarts_used").get<int>();
  r.best_restart = detail::field(j, "best_restart").get<int>();
  r.feasibility_residual = number_from_json(detail::field(j, "feasibility_residual"), "feasibility_residual");
  r.is_upper_bound = detail::field(j, "is_upper_bound").get<bool>();
  r.coupling = Coupling(matrix_from_json(detail::field(j, "coupling"), "coupling"));
  return r;
}

// ---- RobustResult ----

inline Json to_json(const RobustResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "robust_result";
  j["value"] = number_to_json(r.value);
  j["bracket"] = Json::array({number_to_json(r.lo), number_to_json(r.hi)});
  j["pgw_at_crossing"] = number_to_json(r.pgw_at_crossing);
  j["evaluations"] = r.evaluations;
  j["coupling"] = matrix_to_json(r.coupling.matrix());
  return j;
}

inline RobustResult robust_result_from_json(const Json& j) {
  detail::check_schema(j, "robust_result");
  RobustResult r;
  r.value = number_from_json(detail::field(j, "value"), "value");
  const Json& b = detail::field(j, "bracket");
  if (!b.is_array() || b.size() != 2) throw FormatError("'bracket' must be a two-element array");
  r.lo = number_from_json(b[0], "bracket");
  r.hi = number_from_json(b[1], "bracket");
  r.pgw_at_crossing = number_from_json(detail::field(j, "pgw_at_crossing"), "pgw_at_crossing");
  r.evaluations = detail::field(j, "evaluations").get<int>();
  r.coupling = Coupling(matrix_from_json(detail::field(j, "coupling"), "coupling"));
  return r;
}

// ---- CheckReport ----

inline Json to_json(const CheckReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["type"] = "check_report";
  j["name"] = r.name;
  j["status"] = to_string(r.status);
  j["passed"] = r.passed;
  j["measured_slack"] = number_to_json(r.measured_slack);
  j["tolerance"] = number_to_json(r.tolerance);
  j["seed"] = r.seed;
  j["detail"] = r.detail;
  Json inst;
  try {
    inst = r.instance_summary.empty() ? Json::object() : Json::parse(r.instance_summary);
  } catch (const nlohmann::json::parse_error&) {
    inst = r.instance_summary;
  }
  j["instance_summary"] = std::move(inst);
  return j;
}

inline CheckReport check_report_from_json(const Json& j) {
  detail::check_schema(j, "check_report");
  CheckReport r;
  r.name = detail::field(j, "name").get<std::string>();
  const auto status = detail::field(j, "status").get<std::string>();
  if (status == "PASS") r.status = CheckStatus::Pass;
  else if (status == "FAIL") r.status = CheckStatus::Fail;
  else if (status == "INCONCLUSIVE") r.status = CheckStatus::Inconclusive;
  else throw FormatError("unknown check status '" + status + "'");
  r.passed = detail::field(j, "passed").get<bool>();
  r.measured_slack = number_from_json(detail::field(j, "measured_slack"), "measured_slack");
  r.tolerance = number_from_json(detail::field(j, "tolerance"), "tolerance");
  r.seed = detail::field(j, "seed").get<std::uint64_t>();
  r.detail = j.value("detail", std::string());
  const Json& inst = detail::field(j, "instance_summary");
  r.instance_summary = inst.is_string() ? inst.get<std::string>() : inst.dump();
  return r;
}

inline Json to_json(const std::vector<CheckReport>& reports) {
  Json arr = Json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr;
}

// ---- files ----

template <class T>
void save_result(const T& result, const std::string& path) {
  detail::write_file(path, to_json(result).dump(2) + "\n");
}

inline void save_coupling(const Coupling& c, const std::string& path) {
  detail::write_file(path, to_json(c).dump(2) + "\n");
}

inline SolveResult load_solve_result(const std::string& path) {
  return solve_result_from_json(detail::parse_json(detail::read_file(path), path));
}

inline RobustResult load_robust_result(const std::string& path) {
  return robust_result_from_json(detail::parse_json(detail::read_file(path), path));
}

inline std::vector<CheckReport> load_check_reports(const std::string& path) {
  const Json j = detail::parse_json(detail::read_file(path), path);
  if (!j.is_array()) throw FormatError(path + ": check report file must hold a JSON array");
  std::vector<CheckReport> out;
  for (const auto& e : j) out.push_back(check_report_from_json(e));
  return out;
}

inline Coupling load_coupling(const std::string& path) {
  return coupling_from_json(detail::parse_json(detail::read_file(path), path));
}

} // namespace pgw
