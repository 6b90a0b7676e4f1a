#include "robin/io.hpp"

#include "robin/diagnostics.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace robin {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::SchemaViolation, field + ": " + message);
}

void check_keys(const json& object, const std::string& where,
                const std::set<std::string>& known, SchemaMode mode,
                std::vector<std::string>& warnings) {
  for (const auto& item : object.items()) {
    if (!known.count(item.key())) {
      if (mode == SchemaMode::Strict) {
        schema_error(where, "unknown key \"" + item.key() + "\"");
      }
      warnings.push_back(where + ": ignoring unknown key \"" + item.key() + "\"");
    }
  }
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) schema_error(field, "must be a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(field, "must be finite");
  return v;
}

Vector get_vector(const json& j, const std::string& field, Index expected) {
  if (!j.is_array()) schema_error(field, "must be an array of numbers");
  if (expected >= 0 && static_cast<Index>(j.size()) != expected) {
    std::ostringstream os;
    os << "must have " << expected << " entries";
    schema_error(field, os.str());
  }
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) {
    v[i] = get_number(j[static_cast<size_t>(i)], field);
  }
  return v;
}

Matrix get_matrix(const json& j, const std::string& field, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) {
    std::ostringstream os;
    os << "must be an array of " << rows << " rows";
    schema_error(field, os.str());
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    Vector row = get_vector(j[static_cast<size_t>(i)], field, cols);
    m.row(i) = row.transpose();
  }
  return m;
}

Matrix parse_cost(const json& j, Index n, SchemaMode mode, std::vector<std::string>& warnings) {
  if (!j.is_object()) schema_error("cost", "must be an object with a \"type\"");
  if (!j.contains("type") || !j["type"].is_string()) schema_error("cost.type", "required string");
  std::string type = j["type"].get<std::string>();
  if (type == "scaled_identity") {
    check_keys(j, "cost", {"type", "c"}, mode, warnings);
    if (!j.contains("c")) schema_error("cost.c", "required");
    return ProblemSpec::scaled_identity_cost(n, get_number(j["c"], "cost.c"));
  }
  if (type == "rank1") {
    check_keys(j, "cost", {"type", "c", "p"}, mode, warnings);
    if (!j.contains("c") || !j.contains("p")) schema_error("cost", "rank1 needs \"c\" and \"p\"");
    return ProblemSpec::rank1_cost(get_number(j["c"], "cost.c"), get_vector(j["p"], "cost.p", n));
  }
  if (type == "dense") {
    check_keys(j, "cost", {"type", "matrix"}, mode, warnings);
    if (!j.contains("matrix")) schema_error("cost.matrix", "required");
    return get_matrix(j["matrix"], "cost.matrix", n, n);
  }
  schema_error("cost.type", "must be scaled_identity, rank1, or dense");
}

ExpansionSpec parse_expansion(const json& j, SchemaMode mode,
                              std::vector<std::string>& warnings) {
  if (!j.is_object()) schema_error("expansion", "must be an object");
  check_keys(j, "expansion",
             {"base_blocks", "new_variances", "new_agent_std", "pinned", "x_bar"}, mode,
             warnings);
  if (!j.contains("base_blocks") || !j["base_blocks"].is_array() || j["base_blocks"].empty()) {
    schema_error("expansion.base_blocks", "required non-empty array of matrices");
  }
  ExpansionSpec espec;
  espec.n = static_cast<Index>(j["base_blocks"].size());
  for (Index i = 0; i < espec.n; ++i) {
    std::ostringstream field;
    field << "expansion.base_blocks[" << i << "]";
    espec.base_blocks.push_back(
        get_matrix(j["base_blocks"][static_cast<size_t>(i)], field.str(), espec.n, espec.n));
  }
  // Unspecified link variances for the entering agent default to one.
  espec.new_variances = j.contains("new_variances")
                            ? get_vector(j["new_variances"], "expansion.new_variances", espec.n + 1)
                            : Vector(Vector::Ones(espec.n + 1));
  espec.new_agent_std = j.contains("new_agent_std")
                            ? get_vector(j["new_agent_std"], "expansion.new_agent_std", espec.n + 1)
                            : Vector(Vector::Ones(espec.n + 1));
  espec.pinned.assign(static_cast<size_t>(espec.n), {});
  if (j.contains("pinned")) {
    if (!j["pinned"].is_array()) schema_error("expansion.pinned", "must be an array of triples");
    for (const json& triple : j["pinned"]) {
      if (!triple.is_array() || triple.size() != 3) {
        schema_error("expansion.pinned", "each pin is [agent, coordinate, value]");
      }
      if (!triple[0].is_number_integer() || !triple[1].is_number_integer()) {
        schema_error("expansion.pinned", "agent and coordinate must be integers");
      }
      Index agent = triple[0].get<Index>();
      Index coord = triple[1].get<Index>();
      if (agent < 0 || agent >= espec.n || coord < 0 || coord >= espec.n) {
        schema_error("expansion.pinned", "agent/coordinate out of range (0-based)");
      }
      espec.pinned[static_cast<size_t>(agent)].push_back(
          {coord, get_number(triple[2], "expansion.pinned")});
    }
  }
  if (j.contains("x_bar")) {
    espec.x_bar = get_vector(j["x_bar"], "expansion.x_bar", espec.n + 1);
  }
  return espec;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void require_finite(const Vector& v, const std::string& field) {
  if (!v.allFinite()) throw Error(ErrorCode::NonFinite, field + " contains NaN or infinity");
}

void require_finite(const Matrix& m, const std::string& field) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFinite, field + " contains NaN or infinity");
}

void require_finite(double v, const std::string& field) {
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, field + " is not finite");
}

}  // namespace

LoadedProblem load_problem(std::string_view text, SchemaMode mode) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::SchemaViolation, "top level must be an object");

  LoadedProblem loaded;
  check_keys(root, "problem",
             {"n", "mean", "std", "cost", "target", "reference", "delta", "expansion"}, mode,
             loaded.warnings);

  for (const char* key : {"n", "mean", "std", "cost", "target", "reference"}) {
    if (!root.contains(key)) schema_error(key, "required");
  }
  if (!root["n"].is_number_integer()) schema_error("n", "must be an integer");
  Index n = root["n"].get<Index>();
  if (n <= 0) schema_error("n", "must be positive");

  ProblemSpec spec;
  spec.n = n;
  spec.mean = get_matrix(root["mean"], "mean", n, n);
  spec.std_dev = get_matrix(root["std"], "std", n, n);
  spec.cost = parse_cost(root["cost"], n, mode, loaded.warnings);
  spec.target = get_vector(root["target"], "target", n);
  spec.reference = get_vector(root["reference"], "reference", n);

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (spec.std_dev(i, j) < 0.0) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") must be positive";
        schema_error("std", os.str());
      }
    }
  }

  if (root.contains("delta")) loaded.delta = get_number(root["delta"], "delta");
  if (root.contains("expansion")) {
    ExpansionSpec espec = parse_expansion(root["expansion"], mode, loaded.warnings);
    if (espec.n + 1 != n) {
      schema_error("expansion.base_blocks",
                   "block size must match n-1 existing agents (top-level n counts all agents)");
    }
    loaded.expansion = std::move(espec);
  }
  loaded.spec = std::move(spec);
  return loaded;
}

bool SolutionReport::operator==(const SolutionReport& other) const {
  auto opt_eq = [](const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || *a == *b;
  };
  if (per_agent_factors.size() != other.per_agent_factors.size()) return false;
  for (size_t i = 0; i < per_agent_factors.size(); ++i) {
    if (per_agent_factors[i] != other.per_agent_factors[i]) return false;
  }
  return x_star == other.x_star && B_star == other.B_star && objective == other.objective &&
         objective_convention == other.objective_convention &&
         stationarity_residual == other.stationarity_residual &&
         duality_gap == other.duality_gap && property_b == other.property_b &&
         method == other.method && warnings == other.warnings &&
         opt_eq(global_uncertainty_cost, other.global_uncertainty_cost) &&
         opt_eq(local_uncertainty_cost, other.local_uncertainty_cost);
}

SolutionReport make_report(const ProblemSpec& spec, const RobustSolution& sol,
                           const ReportOptions& options) {
  SolutionReport report;
  report.x_star = sol.x_star;
  report.B_star = sol.worst_case.aggregate;
  for (const Rank1Covariance& block : sol.worst_case.per_agent) {
    report.per_agent_factors.push_back(block.factor);
  }
  report.objective = sol.objective;
  report.objective_convention = "half";
  report.stationarity_residual = sol.stationarity_residual;
  report.duality_gap = sol.duality_gap;
  report.property_b = sol.property_b;
  report.method = sol.method;
  report.warnings = sol.warnings;
  if (options.include_diagnostics && sol.property_b) {
    UncertaintyCostReport costs = uncertainty_costs(sol, spec);
    report.global_uncertainty_cost = std::move(costs.global_cost);
    report.local_uncertainty_cost = std::move(costs.local_cost);
  }
  return report;
}

std::string write_report(const SolutionReport& report) {
  require_finite(report.x_star, "x_star");
  require_finite(report.B_star, "B_star");
  require_finite(report.objective, "objective");
  require_finite(report.stationarity_residual, "stationarity_residual");
  require_finite(report.duality_gap, "duality_gap");
  for (const Vector& q : report.per_agent_factors) require_finite(q, "per_agent_factors");
  if (report.global_uncertainty_cost) {
    require_finite(*report.global_uncertainty_cost, "global_uncertainty_cost");
  }
  if (report.local_uncertainty_cost) {
    require_finite(*report.local_uncertainty_cost, "local_uncertainty_cost");
  }

  json out;
  out["x_star"] = vector_to_json(report.x_star);
  out["B_star"] = matrix_to_json(report.B_star);
  json factors = json::array();
  for (const Vector& q : report.per_agent_factors) factors.push_back(vector_to_json(q));
  out["per_agent_factors"] = factors;
  out["objective"] = report.objective;
  out["objective_convention"] = report.objective_convention;
  out["stationarity_residual"] = report.stationarity_residual;
  out["duality_gap"] = report.duality_gap;
  out["property_b"] = report.property_b;
  out["method"] = report.method;
  out["warnings"] = report.warnings;
  if (report.global_uncertainty_cost || report.local_uncertainty_cost) {
    json diag;
    if (report.global_uncertainty_cost) {
      diag["global_uncertainty_cost"] = matrix_to_json(*report.global_uncertainty_cost);
    }
    if (report.local_uncertainty_cost) {
      diag["local_uncertainty_cost"] = matrix_to_json(*report.local_uncertainty_cost);
      diag["local_cost_convention"] = "unhalved";
    }
    out["diagnostics"] = diag;
  }
  // nlohmann keeps keys sorted and prints shortest round-trip decimals, so
  // the bytes are a pure function of the report.
  return out.dump(2) + "\n";
}

SolutionReport parse_report(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  SolutionReport report;
  Index n = static_cast<Index>(root.at("x_star").size());
  report.x_star = get_vector(root.at("x_star"), "x_star", n);
  report.B_star = get_matrix(root.at("B_star"), "B_star", n, n);
  for (const json& q : root.at("per_agent_factors")) {
    report.per_agent_factors.push_back(get_vector(q, "per_agent_factors", -1));
  }
  report.objective = get_number(root.at("objective"), "objective");
  report.objective_convention = root.at("objective_convention").get<std::string>();
  report.stationarity_residual =
      get_number(root.at("stationarity_residual"), "stationarity_residual");
  report.duality_gap = get_number(root.at("duality_gap"), "duality_gap");
  report.property_b = root.at("property_b").get<bool>();
  report.method = root.at("method").get<std::string>();
  report.warnings = root.at("warnings").get<std::vector<std::string>>();
  if (root.contains("diagnostics")) {
    const json& diag = root["diagnostics"];
    if (diag.contains("global_uncertainty_cost")) {
      report.global_uncertainty_cost =
          get_matrix(diag["global_uncertainty_cost"], "global_uncertainty_cost", n, n);
    }
    if (diag.contains("local_uncertainty_cost")) {
      report.local_uncertainty_cost =
          get_matrix(diag["local_uncertainty_cost"], "local_uncertainty_cost", n, n);
    }
  }
  return report;
}

std::string write_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  Index n = rows.empty() ? 0 : rows.front().x.size();
  os << "parameter";
  for (Index i = 0; i < n; ++i) os << ",x" << (i + 1);
  os << ",objective,property_b\n";
  char buf[64];
  auto emit = [&](double v) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "sweep value is not finite");
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (const SweepRow& row : rows) {
    emit(row.parameter);
    for (Index i = 0; i < row.x.size(); ++i) {
      os << ',';
      emit(row.x[i]);
    }
    os << ',';
    emit(row.objective);
    os << ',' << (row.property_b ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  if (!in.good() && !in.eof()) throw Error(ErrorCode::IoError, "failed reading " + path);
  return os.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << contents;
  if (!out.good()) throw Error(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace robin
