#pragma once

#include "robin/types.hpp"

namespace robin {

/// Problem data: an n-agent influence network with known first and second
/// moments per link, a quadratic deviation cost, and a target outcome.
struct ProblemSpec {
  Index n = 0;
  Matrix mean;      ///< m_ij, mean influence of agent j's allocation on agent i
  Matrix std_dev;   ///< v_ij, standard deviation of the (i,j) link
  Matrix cost;      ///< C, symmetric positive semi-definite deviation cost
  Vector target;    ///< z
  Vector reference; ///< x0

  static Matrix scaled_identity_cost(Index n, double c);
  /// c * (p/|p|) (x) (p/|p|); p is normalized so the budget direction has unit length.
  static Matrix rank1_cost(double c, Vector p);
};

struct ValidationIssue {
  std::string field;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Strict enforces v_ij > 0 everywhere. Solve admits zero-uncertainty links
/// (v_ij = 0), which the solver handles; negative entries are always rejected.
enum class Strictness { Strict, Solve };

ValidationReport validate_spec(const ProblemSpec& spec, Strictness strictness = Strictness::Strict);

/// Relative singular-value threshold for the full-rank test on M.
inline constexpr double kRankTolerance = 1e-9;

struct PropertyAReport {
  bool full_rank = false;
  double smallest_singular_value = 0.0;
  double largest_singular_value = 0.0;
  double threshold = kRankTolerance;
};

/// Quantities the solver consumes, aggregated over agents in fixed order so
/// results are bit-reproducible.
struct AggregatedModel {
  Matrix M;          ///< sum_i m_i (x) m_i, aggregated mean influence
  Vector psi;        ///< sum_i z_i m_i
  Vector psi0;       ///< C x0
  Vector sigma_sq;   ///< sigma_i^2 = sum_j v_ij^2
  PropertyAReport property_a;
};

AggregatedModel aggregate(const ProblemSpec& spec);

PropertyAReport check_property_a(const Matrix& M);

inline PropertyAReport check_property_a(const AggregatedModel& model) {
  return check_property_a(model.M);
}

}  // namespace robin
