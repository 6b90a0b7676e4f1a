#pragma once

#include "robin/model.hpp"
#include "robin/types.hpp"

namespace robin {

/// Brute-force grids over the free correlations, bounded by +-v_ij v_ik.
/// Grids are symmetric about zero and include both endpoints.
struct GridSpec {
  int points_per_axis = 201;
  /// Guard on the joint enumeration size (the oracle certifies, it does not scale).
  long max_joint_points = 20'000'000;
};

struct InnerMaxOracle {
  double value = 0.0;
  std::vector<Matrix> per_agent;
  Matrix aggregate;
};

/// Exhaustive per-agent grid search for max <x, B x>, discarding candidates
/// that fail the PSD check (eigenvalue >= -1e-12 * trace). n <= 3 only.
InnerMaxOracle oracle_inner_max(const Vector& x, const ProblemSpec& spec,
                                const GridSpec& grid = {}, Exec exec = Exec::Parallel);

struct SaddleOracle {
  double dual_value = 0.0;    ///< max over grid B of min over x (PD solve per grid point)
  double primal_value = 0.0;  ///< min over candidate x of max over grid B
  double gap = 0.0;           ///< primal - dual; nonnegative on the discretized game
  Vector x;                   ///< argmin from the dual ordering
  Matrix B;                   ///< argmax from the dual ordering
};

/// Both orderings of the discretized saddle problem. The dual ordering
/// enumerates the joint grid across agents; candidates for the primal
/// ordering are the best responses collected from the dual sweep.
SaddleOracle oracle_saddle(const ProblemSpec& spec, const GridSpec& grid = {},
                           Exec exec = Exec::Parallel);

}  // namespace robin
