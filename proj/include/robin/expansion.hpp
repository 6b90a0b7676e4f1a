#pragma once

#include "robin/nature.hpp"
#include "robin/solver.hpp"
#include "robin/types.hpp"

#include <vector>

namespace robin {

struct PinnedCoordinate {
  Index coordinate = 0;  ///< index j of the pinned entry (B_i)_{j, n+1}
  double value = 0.0;
};

/// A new agent (index n, 0-based) joins a network of n existing agents whose
/// covariance blocks B_i are fully known. Only the new agent's covariances
/// are chosen by Nature, possibly with some entries pinned.
struct ExpansionSpec {
  Index n = 0;                            ///< existing agents
  std::vector<Matrix> base_blocks;        ///< B_i, symmetric positive definite, n x n
  Vector new_variances;                   ///< b_i = Var[G_{i,n+1}] > 0, length n+1
  std::vector<std::vector<PinnedCoordinate>> pinned;  ///< per existing agent
  Vector new_agent_std;                   ///< v_{(n+1)j}, length n+1 (fully unknown row)
  Vector x_bar;                           ///< intervention, length n+1; empty if unset
};

ValidationReport validate_expansion(const ExpansionSpec& espec);

struct SliceMax {
  Vector beta;
  double multiplier = 0.0;          ///< KKT multiplier of the ellipsoid constraint
  double boundary_residual = 0.0;   ///< |beta' B^-1 beta - b| / max(b, eps)
};

/// Unique maximizer of <c, beta> over {beta : beta' B^-1 beta <= b, beta_I = pinned}.
/// Unpinned closed form: sqrt(b) B c / sqrt(<c, B c>); with pins the pinned
/// coordinates are eliminated and the KKT multiplier solved on the slice.
/// The maximizer lies on the boundary whenever the free gradient is nonzero.
SliceMax slice_ellipsoid_max(const Matrix& B, double b,
                             const std::vector<PinnedCoordinate>& pinned, const Vector& c);

struct ExpandedWorstCase {
  std::vector<Vector> completions;   ///< beta_i per existing agent
  Rank1Covariance new_agent_block;   ///< over n+1 coordinates
  Matrix aggregate;                  ///< (n+1) x (n+1)
};

/// Nature's best response to x_bar: per-agent ellipsoid-slice maximizers for
/// the existing agents, the rank-1 closed form for the new agent's block.
ExpandedWorstCase expansion_worst_case(const ExpansionSpec& espec, const Vector& x_bar);

/// Uses espec.x_bar.
ExpandedWorstCase expansion_worst_case(const ExpansionSpec& espec);

struct ExpansionOptions {
  double damping = 0.5;
  long max_iterations = 10000;
  double tol = 1e-10;
  double eps_sign = 1e-9;
};

struct ExpansionSolution {
  RobustSolution solution;
  ExpandedWorstCase worst;
  long iterations = 0;
};

/// Damped best-response iteration between the DM's PD solve and Nature's
/// expansion worst case. Experimental: no convergence guarantee exists;
/// failure to converge is reported, never silently truncated.
ExpansionSolution solve_expansion(const ExpansionSpec& espec, const Matrix& mean,
                                  const Matrix& cost, const Vector& target,
                                  const Vector& reference,
                                  const ExpansionOptions& options = {});

}  // namespace robin
