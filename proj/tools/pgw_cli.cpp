#include "pgw/io.hpp"
#include "pgw/oracle.hpp"
#include "pgw/robust.hpp"
#include "pgw/solver.hpp"
#include "pgw/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace pgw;

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kValidation = 3,
  kNoCrossing = 4,
  kCheckFail = 5,
  kInconclusive = 6,
};

/// Thrown for flag combinations that CLI11 cannot express on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string full(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Exponent parse_exponent(const std::string& s) {
  if (s == "inf" || s == "infinity") return Exponent::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("cannot parse --p value '" + s + "'");
  }
  if (used != s.size()) throw UsageError("cannot parse --p value '" + s + "'");
  try {
    return Exponent(v);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
}

double parse_eps(const std::string& flag, const std::string& s) {
  if (s == "inf") return kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + flag + " value '" + s + "'");
  }
  if (used != s.size() || std::isnan(v)) throw UsageError("cannot parse " + flag + " value '" + s + "'");
  return v;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const double v = parse_eps("--eps-grid", detail::trim(item));
    if (v < 0) throw UsageError("--eps-grid values must be nonnegative, got " + item);
    if (!grid.empty() && v < grid.back()) throw UsageError("--eps-grid must be ascending");
    grid.push_back(v);
  }
  if (grid.empty()) throw UsageError("--eps-grid is empty");
  return grid;
}

struct SpaceArgs {
  std::string x, y;
  std::string x_weights, y_weights;
  std::string metric;
  bool normalize = false;

  void add(CLI::App* cmd) {
    cmd->add_option("space_x", x, "First space (.json or .csv)")->required();
    cmd->add_option("space_y", y, "Second space (.json or .csv)")->required();
    cmd->add_option("--x-weights", x_weights, "Single-column CSV weights for a CSV first space");
    cmd->add_option("--y-weights", y_weights, "Single-column CSV weights for a CSV second space");
    cmd->add_option("--metric", metric, "Point-cloud metric: precomputed, euclidean, l1, linf");
    cmd->add_flag("--normalize", normalize, "Divide weights by their sum on load");
  }

  MMSpace load(const std::string& path, const std::string& weights) const {
    SpaceFile f = SpaceFile::from_path(path);
    f.weights_path = weights;
    if (!metric.empty()) {
      try {
        f.metric = parse_metric(metric);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
    }
    return load_space(f, normalize);
  }
  std::pair<MMSpace, MMSpace> load() const { return {load(x, x_weights), load(y, y_weights)}; }
};

struct Common {
  int threads = 1;
  std::uint64_t seed = 0;
  int restarts = SolveConfig{}.restarts;

  SolveConfig config() const {
    SolveConfig c;
    c.threads = threads;
    c.seed = seed;
    c.restarts = restarts;
    return c;
  }
};

void write_out(const std::string& path, const Json& j) {
  if (!path.empty()) detail::write_file(path, j.dump(2) + "\n");
}

int run_compute(const SpaceArgs& sa, const Common& common, const std::string& distance, const std::string& p_str,
                const std::optional<std::string>& eps1, const std::optional<std::string>& eps2,
                const std::optional<double>& delta, const std::string& out) {
  const Exponent p = parse_exponent(p_str);
  if ((distance == "pgw" || distance == "spgw") && !eps1 && !eps2)
    throw UsageError("--distance " + distance + " requires --eps1 and/or --eps2");
  if (distance == "mpgw" && !delta) throw UsageError("--distance mpgw requires --delta");
  if (distance == "gw" && (eps1 || eps2 || delta)) throw UsageError("--distance gw takes no relaxation flags");
  if (distance != "mpgw" && delta) throw UsageError("--delta applies to --distance mpgw only");
  if (distance == "mpgw" && (eps1 || eps2)) throw UsageError("--distance mpgw takes --delta, not --eps1/--eps2");

  const auto [x, y] = sa.load();
  const SolveConfig cfg = common.config();
  SolveResult r;
  if (distance == "gw") {
    r = solve_gw(x, y, p, cfg);
  } else if (distance == "mpgw") {
    r = solve_mpgw(x, y, *delta, p, cfg);
  } else {
    const double e1 = eps1 ? parse_eps("--eps1", *eps1) : parse_eps("--eps2", *eps2);
    const double e2 = eps2 ? parse_eps("--eps2", *eps2) : e1;
    r = distance == "pgw" ? solve_pgw(x, y, e1, e2, p, cfg) : solve_spgw(x, y, e1, e2, p, cfg);
  }
  std::cout << full(r.value) << "\n";
  std::cerr << distance << " p=" << p.to_string() << " value=" << full(r.value) << " restarts=" << r.restarts_used
            << " best_restart=" << r.best_restart << " residual=" << full(r.feasibility_residual) << "\n";
  write_out(out, to_json(r));
  return kOk;
}

int run_robust(const SpaceArgs& sa, const Common& common, double k, const std::string& p_str, double bracket_tol,
               const std::string& out) {
  const Exponent p = parse_exponent(p_str);
  if (!(k > 0) || !std::isfinite(k)) throw UsageError("--k must be a positive finite real");
  if (!(bracket_tol > 0)) throw UsageError("--bracket-tol must be positive");
  const auto [x, y] = sa.load();
  const RobustResult r = robust_pgw(x, y, k, p, common.config(), bracket_tol);
  std::cout << full(r.value) << " " << full(r.lo) << " " << full(r.hi) << "\n";
  std::cerr << "robust k=" << full(k) << " p=" << p.to_string() << " value=" << full(r.value) << " bracket=["
            << full(r.lo) << ", " << full(r.hi) << "] evaluations=" << r.evaluations << "\n";
  write_out(out, to_json(r));
  return kOk;
}

int run_verify(const Common& common, const std::string& suite, std::uint64_t seed, double bracket_tol,
               const std::string& out) {
  const auto& names = suite_names();
  if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
    throw UsageError("unknown suite '" + suite + "'");
  VerifyConfig vc;
  vc.solver = common.config();
  vc.bracket_tol = bracket_tol;
  const auto reports = run_suite(suite, seed, vc);
  int fails = 0, inconclusive = 0;
  for (const auto& r : reports) {
    std::cerr << to_string(r.status) << " " << r.name << " slack=" << full(r.measured_slack)
              << " tol=" << full(r.tolerance) << "\n";
    fails += r.status == CheckStatus::Fail;
    inconclusive += r.status == CheckStatus::Inconclusive;
  }
  const Json j = to_json(reports);
  std::cout << j.dump(2) << "\n";
  write_out(out, j);
  std::cerr << reports.size() << " checks, " << fails << " failed, " << inconclusive << " inconclusive\n";
  if (fails) return kCheckFail;
  if (inconclusive) return kInconclusive;
  return kOk;
}

int run_sweep(const SpaceArgs& sa, const Common& common, const std::string& p_str, const std::string& grid_str,
              const std::string& out) {
  const Exponent p = parse_exponent(p_str);
  const auto grid = parse_grid(grid_str);
  const auto [x, y] = sa.load();
  const SolveConfig cfg = common.config();
  const CurveResult curve = pgw_curve(x, y, p, grid, cfg);

  std::string lines;
  auto emit = [&](const Json& j) {
    const std::string s = j.dump();
    std::cout << s << "\n";
    lines += s + "\n";
  };
  double prev_s = 0.0;
  std::vector<Json> warnings;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = solve_spgw(x, y, grid[i], grid[i], p, cfg).value;
    Json row;
    row["eps"] = number_to_json(grid[i]);
    row["pgw"] = number_to_json(curve.points[i].value);
    row["spgw"] = number_to_json(s);
    emit(row);
    if (i > 0 && s - prev_s > 2.0 * cfg.fw_tol) {
      Json w;
      w["warning"] = "spgw increased by " + full(s - prev_s) + " between eps = " + full(grid[i - 1]) +
                     " and eps = " + full(grid[i]);
      w["distance"] = "spgw";
      w["eps_prev"] = number_to_json(grid[i - 1]);
      w["eps"] = number_to_json(grid[i]);
      warnings.push_back(std::move(w));
    }
    prev_s = s;
  }
  for (const auto& cw : curve.warnings) {
    Json w;
    w["warning"] = cw.message;
    w["distance"] = "pgw";
    w["eps_prev"] = number_to_json(cw.eps_prev);
    w["eps"] = number_to_json(cw.eps);
    warnings.insert(warnings.begin(), std::move(w));
  }
  for (const auto& w : warnings) {
    emit(w);
    std::cerr << "warning: " << w["warning"].get<std::string>() << "\n";
  }
  if (!out.empty()) detail::write_file(out, lines);
  return kOk;
}

int run_oracle(const SpaceArgs& sa, const std::string& family, const std::string& p_str,
               const std::optional<std::string>& eps1, const std::optional<std::string>& eps2,
               const std::optional<double>& delta, int resolution) {
  const Exponent p = parse_exponent(p_str);
  if (p.is_infinite()) throw UsageError("the oracle supports finite p only");
  if (resolution < 1) throw UsageError("--resolution must be >= 1");
  RelaxParams params;
  if (family == "mass") {
    if (!delta) throw UsageError("--family mass requires --delta");
    params = RelaxParams::mass(*delta);
  } else if (family == "exact") {
    params = RelaxParams::exact();
  } else {
    if (!eps1 && !eps2) throw UsageError("--family " + family + " requires --eps1 and/or --eps2");
    const double e1 = eps1 ? parse_eps("--eps1", *eps1) : parse_eps("--eps2", *eps2);
    const double e2 = eps2 ? parse_eps("--eps2", *eps2) : e1;
    params = family == "relaxed" ? RelaxParams::relaxed(e1, e2) : RelaxParams::symmetric(e1, e2);
  }
  const auto [x, y] = sa.load();
  if (x.size() * y.size() > kOracleCap)
    throw UsageError("oracle instance too large: n*m = " + std::to_string(x.size() * y.size()) + " > " +
                     std::to_string(kOracleCap));
  const double v = brute_force_oracle(x, y, params, p, resolution);
  std::cout << full(v) << "\n";
  std::cerr << "oracle family=" << family << " p=" << p.to_string() << " value=" << full(v) << "\n";
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Partial Gromov-Wasserstein distances on finite metric measure spaces"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "Worker thread cap")->envname("PGW_THREADS")->check(CLI::PositiveNumber);

  std::string p_str = "2", out;
  std::optional<std::string> eps1, eps2;
  std::optional<double> delta;

  SpaceArgs compute_spaces;
  std::string distance = "gw";
  auto* compute = app.add_subcommand("compute", "Solve GW, PGW, sPGW or mPGW between two spaces");
  compute_spaces.add(compute);
  compute->add_option("--distance", distance, "gw, pgw, spgw or mpgw")
      ->check(CLI::IsMember({"gw", "pgw", "spgw", "mpgw"}));
  compute->add_option("--p", p_str, "Exponent in [1, inf]; spell infinity as inf");
  compute->add_option("--eps1", eps1, "Relaxation of the first marginal");
  compute->add_option("--eps2", eps2, "Relaxation of the second marginal");
  compute->add_option("--delta", delta, "Transported mass for mpgw");
  compute->add_option("--restarts", common.restarts, "Frank-Wolfe restarts")->check(CLI::PositiveNumber);
  compute->add_option("--seed", common.seed, "Random seed");
  compute->add_option("--out", out, "Write the SolveResult JSON here");

  SpaceArgs robust_spaces;
  double k = 1.0, bracket_tol = kDefaultBracketTol;
  auto* robust = app.add_subcommand("robust", "Robust partial GW metric");
  robust_spaces.add(robust);
  robust->add_option("--k", k, "Slope of the robust condition (> 0)");
  robust->add_option("--p", p_str, "Exponent in [1, inf]; spell infinity as inf");
  robust->add_option("--bracket-tol", bracket_tol, "Bisection bracket width");
  robust->add_option("--restarts", common.restarts, "Frank-Wolfe restarts")->check(CLI::PositiveNumber);
  robust->add_option("--seed", common.seed, "Random seed");
  robust->add_option("--out", out, "Write the RobustResult JSON here");

  std::string suite = "all";
  std::uint64_t verify_seed = 42;
  auto* verify = app.add_subcommand("verify", "Run the property-check suites");
  verify->add_option("--suite", suite, "all, " + [] {
    std::string s;
    for (const auto& n : suite_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());
  verify->add_option("--seed", verify_seed, "Suite seed");
  verify->add_option("--bracket-tol", bracket_tol, "Bisection bracket width for robust checks");
  verify->add_option("--out", out, "Write the report array here");

  SpaceArgs sweep_spaces;
  std::string grid = "0,0.25,0.5,1,2,4";
  auto* sweep = app.add_subcommand("sweep", "Tabulate PGW and sPGW over an eps grid as JSON lines");
  sweep_spaces.add(sweep);
  sweep->add_option("--p", p_str, "Exponent in [1, inf]; spell infinity as inf");
  sweep->add_option("--eps-grid", grid, "Comma-separated ascending nonnegative eps values");
  sweep->add_option("--restarts", common.restarts, "Frank-Wolfe restarts")->check(CLI::PositiveNumber);
  sweep->add_option("--seed", common.seed, "Random seed");
  sweep->add_option("--out", out, "Write the JSON lines here");

  SpaceArgs oracle_spaces;
  std::string family = "exact";
  int resolution = 50;
  auto* oracle = app.add_subcommand("oracle", "Exhaustive global minimum for tiny instances");
  oracle_spaces.add(oracle);
  oracle->add_option("--family", family, "exact, relaxed, symmetric or mass")
      ->check(CLI::IsMember({"exact", "relaxed", "symmetric", "mass"}));
  oracle->add_option("--p", p_str, "Finite exponent >= 1");
  oracle->add_option("--eps1", eps1, "Relaxation of the first marginal");
  oracle->add_option("--eps2", eps2, "Relaxation of the second marginal");
  oracle->add_option("--delta", delta, "Transported mass for the mass family");
  oracle->add_option("--resolution", resolution, "Grid steps for the supplementary edge scan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*compute) return run_compute(compute_spaces, common, distance, p_str, eps1, eps2, delta, out);
    if (*robust) return run_robust(robust_spaces, common, k, p_str, bracket_tol, out);
    if (*verify) return run_verify(common, suite, verify_seed, bracket_tol, out);
    if (*sweep) return run_sweep(sweep_spaces, common, p_str, grid, out);
    if (*oracle) return run_oracle(oracle_spaces, family, p_str, eps1, eps2, delta, resolution);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const NoCrossingError& e) {
    std::cerr << "no crossing: " << e.what() << "\n";
    return kNoCrossing;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsage;
}
