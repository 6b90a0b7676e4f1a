#pragma once

#include "robin/expansion.hpp"
#include "robin/model.hpp"
#include "robin/solver.hpp"
#include "robin/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace robin {

/// Unknown keys are rejected in Strict mode and collected as warnings in
/// Lenient mode.
enum class SchemaMode { Strict, Lenient };

struct LoadedProblem {
  ProblemSpec spec;
  std::optional<double> delta;
  std::optional<ExpansionSpec> expansion;
  std::vector<std::string> warnings;
};

/// Parses and validates a problem file (UTF-8 JSON). Schema:
///   n, mean, std, cost ({"type":"scaled_identity"|"rank1"|"dense", ...}),
///   target, reference, optional delta, optional expansion.
/// A rank1 cost direction p is normalized to unit length on load.
LoadedProblem load_problem(std::string_view text, SchemaMode mode = SchemaMode::Strict);

struct ReportOptions {
  bool include_diagnostics = false;
};

struct SolutionReport {
  Vector x_star;
  Matrix B_star;
  std::vector<Vector> per_agent_factors;
  double objective = 0.0;
  std::string objective_convention = "half";  ///< "half" (f) or "unhalved" (inner value)
  double stationarity_residual = 0.0;
  double duality_gap = 0.0;
  bool property_b = false;
  std::string method;
  std::vector<std::string> warnings;
  std::optional<Matrix> global_uncertainty_cost;
  std::optional<Matrix> local_uncertainty_cost;

  bool operator==(const SolutionReport& other) const;
};

SolutionReport make_report(const ProblemSpec& spec, const RobustSolution& sol,
                           const ReportOptions& options = {});

/// Deterministic key order; refuses to serialize non-finite values.
/// parse_report(write_report(r)) == r holds exactly.
std::string write_report(const SolutionReport& report);
SolutionReport parse_report(std::string_view text);

struct SweepRow {
  double parameter = 0.0;
  Vector x;
  double objective = 0.0;
  bool property_b = false;
};

/// Header "parameter,x1,...,xn,objective,property_b" plus one row per grid point.
std::string write_sweep_csv(const std::vector<SweepRow>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace robin
