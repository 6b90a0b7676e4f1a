#include "robin/cli.hpp"

#include "robin/diagnostics.hpp"
#include "robin/expansion.hpp"
#include "robin/higher_order.hpp"
#include "robin/io.hpp"
#include "robin/model.hpp"
#include "robin/oracle.hpp"
#include "robin/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

namespace robin {

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string input;
  std::string out;
  double tol = 1e-10;
  std::string format = "json";
  bool lenient = false;
};

struct SolveFlags {
  std::string search = "iterate";
  int max_orthant_iters = 64;
};

struct SweepFlags {
  std::string param;
  double from = 0.0;
  double to = 1.0;
  int steps = 100;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::NonFinite:
    case ErrorCode::IoError:
      return kExitIo;
    case ErrorCode::SchemaViolation:
    case ErrorCode::InvalidSpec:
    case ErrorCode::DimensionMismatch:
      return kExitValidation;
    default:
      return kExitSolver;
  }
}

const char* code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InvalidSpec: return "invalid_spec";
    case ErrorCode::FactorizationFailure: return "factorization_failure";
    case ErrorCode::PropertyBViolation: return "property_b_violation";
    case ErrorCode::NoFixedPoint: return "no_fixed_point";
    case ErrorCode::TooLarge: return "too_large";
    case ErrorCode::InfeasiblePins: return "infeasible_pins";
    case ErrorCode::EmptyFeasibleSet: return "empty_feasible_set";
    case ErrorCode::ZeroGradient: return "zero_gradient";
    case ErrorCode::ZeroEntry: return "zero_entry";
    case ErrorCode::NondegeneracyFailure: return "nondegeneracy_failure";
    case ErrorCode::MaxIterations: return "max_iterations";
    case ErrorCode::RegimeViolation: return "regime_violation";
    case ErrorCode::UnsupportedFeature: return "unsupported_feature";
    case ErrorCode::ParseError: return "parse_error";
    case ErrorCode::SchemaViolation: return "schema_violation";
    case ErrorCode::NonFinite: return "non_finite";
    case ErrorCode::IoError: return "io_error";
  }
  return "error";
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void emit(const CommonFlags& flags, std::ostream& out, const std::string& text) {
  if (flags.out.empty()) {
    out << text;
  } else {
    write_file(flags.out, text);
  }
}

LoadedProblem load(const CommonFlags& flags) {
  std::string text = read_file(flags.input);
  return load_problem(text, flags.lenient ? SchemaMode::Lenient : SchemaMode::Strict);
}

SolveOptions solve_options(const SolveFlags& flags) {
  SolveOptions options;
  options.search = flags.search == "exhaustive" ? SolveOptions::Search::Exhaustive
                                                : SolveOptions::Search::Iterate;
  options.max_orthant_iters = flags.max_orthant_iters;
  return options;
}

void append_certificate_warnings(const ProblemSpec& spec, RobustSolution& sol, double tol) {
  Certificate cert = verify_saddle(spec, sol, tol, 10.0 * tol);
  if (!cert.pass) {
    std::ostringstream os;
    os << "certificate failed at tol " << tol << ": stationarity " << cert.stationarity_residual
       << ", gap " << cert.duality_gap;
    sol.warnings.push_back(os.str());
  }
}

int cmd_validate(const CommonFlags& flags, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  ValidationReport report = validate_spec(loaded.spec, Strictness::Strict);
  json j;
  j["ok"] = report.ok();
  json violations = json::array();
  for (const ValidationIssue& issue : report.violations) {
    violations.push_back({{"field", issue.field}, {"message", issue.message}});
  }
  j["violations"] = violations;
  if (report.ok()) {
    AggregatedModel model = aggregate(loaded.spec);
    j["property_a"] = {{"full_rank", model.property_a.full_rank},
                       {"smallest_singular_value", model.property_a.smallest_singular_value},
                       {"largest_singular_value", model.property_a.largest_singular_value},
                       {"threshold", model.property_a.threshold}};
  }
  j["warnings"] = loaded.warnings;
  emit(flags, out, j.dump(2) + "\n");
  return report.ok() ? kExitOk : kExitValidation;
}

int cmd_solve(const CommonFlags& flags, const SolveFlags& sflags, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  RobustSolution sol = solve_robust(loaded.spec, solve_options(sflags));
  append_certificate_warnings(loaded.spec, sol, flags.tol);
  for (const std::string& w : loaded.warnings) sol.warnings.push_back(w);
  emit(flags, out, write_report(make_report(loaded.spec, sol)));
  return kExitOk;
}

int cmd_diagnose(const CommonFlags& flags, const SolveFlags& sflags, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  RobustSolution sol = solve_robust(loaded.spec, solve_options(sflags));
  append_certificate_warnings(loaded.spec, sol, flags.tol);
  ReportOptions ropts;
  ropts.include_diagnostics = true;
  emit(flags, out, write_report(make_report(loaded.spec, sol, ropts)));
  return kExitOk;
}

int cmd_worst_case(const CommonFlags& flags, const std::string& signs_str, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  SignPattern signs;
  json j;
  if (!signs_str.empty()) {
    if (static_cast<Index>(signs_str.size()) != loaded.spec.n) {
      throw Error(ErrorCode::InvalidSpec, "--signs needs one +/- per agent");
    }
    signs.signs.resize(loaded.spec.n);
    for (Index i = 0; i < loaded.spec.n; ++i) {
      char c = signs_str[static_cast<size_t>(i)];
      if (c != '+' && c != '-') throw Error(ErrorCode::InvalidSpec, "--signs uses only + and -");
      signs.signs[i] = c == '+' ? 1 : -1;
    }
  } else {
    RobustSolution sol = solve_robust(loaded.spec);
    signs = sol.worst_case.sign_pattern;
    j["x_star"] = vector_json(sol.x_star);
  }
  WorstCase wc = worst_case(signs, loaded.spec);
  j["sign_pattern"] = wc.sign_pattern.to_string();
  j["B_star"] = matrix_json(wc.aggregate);
  json factors = json::array();
  json traces = json::array();
  for (const Rank1Covariance& block : wc.per_agent) {
    factors.push_back(vector_json(block.factor));
    traces.push_back(block.trace());
  }
  j["per_agent_factors"] = factors;
  j["per_agent_trace"] = traces;
  emit(flags, out, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags, const SweepFlags& sflags, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  if (sflags.steps < 1) throw Error(ErrorCode::InvalidSpec, "--steps must be at least 1");
  const bool two_agent_param =
      sflags.param == "v" || sflags.param == "m" || sflags.param == "c";
  if (two_agent_param && loaded.spec.n != 2) {
    throw Error(ErrorCode::InvalidSpec,
                "sweep over v, m, or c is defined for the symmetric two-agent family (n = 2)");
  }
  if (!two_agent_param && sflags.param != "delta") {
    throw Error(ErrorCode::InvalidSpec, "--param must be one of v, m, c, delta");
  }

  SolveOptions options;
  options.allow_boundary = true;  // a row is emitted even at degenerate points

  std::vector<SweepRow> rows;
  rows.reserve(static_cast<size_t>(sflags.steps) + 1);
  for (int step = 0; step <= sflags.steps; ++step) {
    double t = sflags.from +
               (sflags.to - sflags.from) * static_cast<double>(step) /
                   static_cast<double>(sflags.steps);
    SweepRow row;
    row.parameter = t;
    if (sflags.param == "delta") {
      HigherOrderSpec hspec;
      hspec.n = loaded.spec.n;
      hspec.mean = loaded.spec.mean;
      hspec.std_dev = loaded.spec.std_dev;
      hspec.delta = t;
      hspec.target = loaded.spec.target;
      RobustSolution sol = ho_solve(hspec, options);
      row.x = sol.x_star;
      row.objective = sol.objective;
      row.property_b = sol.property_b;
    } else {
      ProblemSpec spec = loaded.spec;
      if (sflags.param == "v") {
        spec.std_dev(0, 0) = t;
        spec.std_dev(1, 0) = t;
      } else if (sflags.param == "m") {
        spec.mean(0, 0) = t;
        spec.mean(1, 0) = t;
      } else {
        spec.cost = ProblemSpec::scaled_identity_cost(spec.n, t);
      }
      RobustSolution sol = solve_robust(spec, options);
      row.x = sol.x_star;
      row.objective = sol.objective;
      row.property_b = sol.property_b;
    }
    rows.push_back(std::move(row));
  }

  if (flags.format == "csv") {
    emit(flags, out, write_sweep_csv(rows));
  } else {
    json j;
    json grid = json::array();
    for (const SweepRow& row : rows) {
      grid.push_back({{"parameter", row.parameter},
                      {"x", vector_json(row.x)},
                      {"objective", row.objective},
                      {"property_b", row.property_b}});
    }
    j["rows"] = grid;
    if (loaded.spec.n == 2) {
      // Brackets where the allocation ordering x1 - x2 changes sign.
      json flips = json::array();
      for (size_t k = 1; k < rows.size(); ++k) {
        double before = rows[k - 1].x[0] - rows[k - 1].x[1];
        double after = rows[k].x[0] - rows[k].x[1];
        if ((before >= 0.0) != (after >= 0.0)) {
          flips.push_back({{"below", rows[k - 1].parameter}, {"above", rows[k].parameter}});
        }
      }
      j["sign_flips_x1_minus_x2"] = flips;
    }
    emit(flags, out, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_expand(const CommonFlags& flags, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  if (!loaded.expansion) {
    throw Error(ErrorCode::SchemaViolation, "input carries no \"expansion\" object");
  }
  const ExpansionSpec& espec = *loaded.expansion;
  json j;
  if (espec.x_bar.size() > 0) {
    ExpandedWorstCase wc = expansion_worst_case(espec);
    j["x_bar"] = vector_json(espec.x_bar);
    json completions = json::array();
    for (const Vector& beta : wc.completions) completions.push_back(vector_json(beta));
    j["completions"] = completions;
    j["new_agent_factor"] = vector_json(wc.new_agent_block.factor);
    j["B_star"] = matrix_json(wc.aggregate);
  } else {
    ExpansionSolution expanded = solve_expansion(espec, loaded.spec.mean, loaded.spec.cost,
                                                 loaded.spec.target, loaded.spec.reference);
    j["x_star"] = vector_json(expanded.solution.x_star);
    j["objective"] = expanded.solution.objective;
    j["stationarity_residual"] = expanded.solution.stationarity_residual;
    j["duality_gap"] = expanded.solution.duality_gap;
    j["property_b"] = expanded.solution.property_b;
    j["method"] = expanded.solution.method;
    j["iterations"] = expanded.iterations;
    j["warnings"] = expanded.solution.warnings;
    json completions = json::array();
    for (const Vector& beta : expanded.worst.completions) {
      completions.push_back(vector_json(beta));
    }
    j["completions"] = completions;
    j["new_agent_factor"] = vector_json(expanded.worst.new_agent_block.factor);
    j["B_star"] = matrix_json(expanded.worst.aggregate);
  }
  emit(flags, out, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_higher_order(const CommonFlags& flags, const SolveFlags& sflags, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  if (!loaded.delta) {
    throw Error(ErrorCode::SchemaViolation, "input carries no \"delta\" field");
  }
  HigherOrderSpec hspec;
  hspec.n = loaded.spec.n;
  hspec.mean = loaded.spec.mean;
  hspec.std_dev = loaded.spec.std_dev;
  hspec.delta = *loaded.delta;
  hspec.target = loaded.spec.target;
  RobustSolution sol = ho_solve(hspec, solve_options(sflags));
  SolutionReport report = make_report(loaded.spec, sol);
  report.objective_convention = "unhalved";
  emit(flags, out, write_report(report));
  return kExitOk;
}

int cmd_oracle_check(const CommonFlags& flags, int grid_points, std::ostream& out) {
  LoadedProblem loaded = load(flags);
  GridSpec grid;
  grid.points_per_axis = grid_points;

  RobustSolution sol = solve_robust(loaded.spec);
  SaddleOracle saddle = oracle_saddle(loaded.spec, grid);
  InnerMaxOracle inner = oracle_inner_max(sol.x_star, loaded.spec, grid);
  double closed_form = inner_max_value(sol.x_star, loaded.spec);

  json j;
  j["grid"] = grid_points;
  j["analytic_objective"] = sol.objective;
  j["oracle_dual_value"] = saddle.dual_value;
  j["oracle_primal_value"] = saddle.primal_value;
  j["oracle_gap"] = saddle.gap;
  j["abs_error_dual"] = std::abs(saddle.dual_value - sol.objective);
  j["abs_error_primal"] = std::abs(saddle.primal_value - sol.objective);
  j["inner_closed_form"] = closed_form;
  j["inner_oracle"] = inner.value;
  j["inner_abs_error"] = std::abs(inner.value - closed_form);
  emit(flags, out, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"robust network intervention solver"};
  app.require_subcommand(1);

  CommonFlags common;
  SolveFlags solve_flags;
  SweepFlags sweep_flags;
  std::string signs;
  int grid_points = 201;

  auto add_common = [&](CLI::App* cmd, bool needs_input = true) {
    auto* opt = cmd->add_option("--input", common.input, "problem file (JSON)");
    if (needs_input) opt->required();
    cmd->add_option("--out", common.out, "output path (default stdout)");
    cmd->add_option("--tol", common.tol, "certificate stationarity tolerance")
        ->default_val(1e-10);
    cmd->add_option("--format", common.format, "json|csv")
        ->default_val("json")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--lenient", common.lenient, "warn on unknown keys instead of rejecting");
  };
  auto add_solve = [&](CLI::App* cmd) {
    cmd->add_option("--search", solve_flags.search, "orthant search strategy")
        ->default_val("iterate")
        ->check(CLI::IsMember({"iterate", "exhaustive"}));
    cmd->add_option("--max-orthant-iters", solve_flags.max_orthant_iters,
                    "sign-iteration cap before the exhaustive fallback")
        ->default_val(64);
  };

  CLI::App* validate = app.add_subcommand("validate", "check a problem file");
  add_common(validate);

  CLI::App* solve = app.add_subcommand("solve", "robust intervention and worst case");
  add_common(solve);
  add_solve(solve);

  CLI::App* worst = app.add_subcommand("worst-case", "Nature's best response");
  add_common(worst);
  worst->add_option("--signs", signs, "sign pattern like +-+ (default: solve first)");

  CLI::App* diagnose = app.add_subcommand("diagnose", "solve plus uncertainty-cost matrices");
  add_common(diagnose);
  add_solve(diagnose);

  CLI::App* sweep = app.add_subcommand("sweep", "solve along a parameter grid");
  add_common(sweep);
  sweep->add_option("--param", sweep_flags.param, "v|m|c|delta")->required();
  sweep->add_option("--from", sweep_flags.from, "start value")->required();
  sweep->add_option("--to", sweep_flags.to, "end value")->required();
  sweep->add_option("--steps", sweep_flags.steps, "number of intervals")->required();

  CLI::App* expand = app.add_subcommand("expand", "network-expansion worst case / solve");
  add_common(expand);

  CLI::App* higher = app.add_subcommand("higher-order", "second-order zero-mean robust solve");
  add_common(higher);
  add_solve(higher);

  CLI::App* oracle = app.add_subcommand("oracle-check", "brute-force certification");
  add_common(oracle);
  oracle->add_option("--grid", grid_points, "grid points per free correlation")->default_val(201);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    json j;
    j["error"] = {{"code", "usage"}, {"message", e.what()}};
    err << j.dump(2) << "\n";
    return kExitValidation;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(common, out);
    if (app.got_subcommand(solve)) return cmd_solve(common, solve_flags, out);
    if (app.got_subcommand(worst)) return cmd_worst_case(common, signs, out);
    if (app.got_subcommand(diagnose)) return cmd_diagnose(common, solve_flags, out);
    if (app.got_subcommand(sweep)) return cmd_sweep(common, sweep_flags, out);
    if (app.got_subcommand(expand)) return cmd_expand(common, out);
    if (app.got_subcommand(higher)) return cmd_higher_order(common, solve_flags, out);
    if (app.got_subcommand(oracle)) return cmd_oracle_check(common, grid_points, out);
  } catch (const Error& e) {
    json j;
    j["error"] = {{"code", code_name(e.code())}, {"message", e.what()}};
    err << j.dump(2) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    json j;
    j["error"] = {{"code", "internal"}, {"message", e.what()}};
    err << j.dump(2) << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace robin
