#pragma once

#include "robin/model.hpp"
#include "robin/types.hpp"

namespace robin {

/// One agent's worst-case covariance block, stored as its rank-1 factor q_i
/// with (q_i)_j = s_j v_ij. The dense block is materialized on demand.
struct Rank1Covariance {
  Index agent = 0;
  Vector factor;

  Matrix matrix() const { return Matrix(factor * factor.transpose()); }
  double trace() const { return factor.squaredNorm(); }
};

/// Nature's best response to a sign pattern: per-agent rank-1 blocks and
/// their aggregate B* = sum_i q_i (x) q_i.
struct WorstCase {
  std::vector<Rank1Covariance> per_agent;
  Matrix aggregate;
  SignPattern sign_pattern;
};

/// Depends only on the signs, not on any magnitudes.
WorstCase worst_case(const SignPattern& signs, const ProblemSpec& spec,
                     Exec exec = Exec::Parallel);

/// Entrywise Gram of the std rows, (V'V)_{jk} = sum_i v_ij v_ik. The
/// aggregate worst case is its sign conjugation D_s (V'V) D_s, so orthant
/// searches share one O(n^3) pass.
Matrix uncertainty_gram(const Matrix& std_dev, Exec exec = Exec::Parallel);

/// Closed-form max_{B} <x, B x> over the uncertainty set:
/// sum_i (sum_j v_ij |x_j|)^2. Valid for any x, including zeros.
double inner_max_value(const Vector& x, const ProblemSpec& spec);

/// Pin covariance entry (B_agent)_{row,col} (and its mirror) to a value.
struct PinnedEntry {
  Index agent = 0;
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

struct ConstrainedInnerMax {
  double value = 0.0;
  std::vector<Matrix> per_agent;
  Matrix aggregate;
  long iterations = 0;
};

/// Numeric maximizer of <x, B x> over the uncertainty set with some entries
/// pinned. Projected ascent onto {PSD} intersect {fixed diagonal and pins}.
/// With no pins the value matches inner_max_value up to solver tolerance.
ConstrainedInnerMax constrained_inner_max(const Vector& x, const ProblemSpec& spec,
                                          const std::vector<PinnedEntry>& fixed = {});

/// Generalized form: maximize sum_i trace(B_i W_i) over the same per-agent
/// sets, where W_i is a symmetric PSD weight. Used by the higher-order
/// general-mean path with W_i = alpha_i x(x)x + y(x)y.
ConstrainedInnerMax constrained_weighted_max(const std::vector<Matrix>& weights,
                                             const Matrix& std_dev,
                                             const std::vector<PinnedEntry>& fixed = {});

}  // namespace robin
