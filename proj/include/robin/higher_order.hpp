#pragma once

#include "robin/model.hpp"
#include "robin/nature.hpp"
#include "robin/solver.hpp"
#include "robin/types.hpp"

namespace robin {

/// Second-order interaction model: outcomes propagate through
/// (I + delta G + delta^2 G^2) x with independent rows of G and zero
/// self-influence in the mean. Third and higher orders are unsupported.
struct HigherOrderSpec {
  Index n = 0;
  Matrix mean;      ///< zero diagonal required
  Matrix std_dev;   ///< nonnegative entries
  double delta = 0.0;
  Vector target;
  /// Interaction order; only 2 is supported. Beyond that the objective is no
  /// longer linear in the per-agent covariances and the rank-1 worst case
  /// breaks down.
  int order = 2;
};

ValidationReport validate_higher_order(const HigherOrderSpec& hspec);

/// kappa_i = delta + delta^2 sum_k v_ki^2 (incoming variances, column sums);
/// alpha_k = sum_i (v_ik^2 + m_ik^2) for the general-mean assembly.
/// kappa is the per-agent uncertainty weight; not the worst-case eigenvectors.
struct HOWeights {
  Vector kappa;
  Vector alpha;
};

HOWeights ho_weights(const HigherOrderSpec& hspec);

/// y = (mean + I) x, the mean-propagated intervention in the general assembly.
Vector ho_propagated(const HigherOrderSpec& hspec, const Vector& x);

/// Zero mean: <x,x> + sum_i kappa_i <x, B_i x> - 2<z,x> + |z|^2.
/// General mean (unit delta): sum_i (alpha_i <x,B_i x> + <y, B_i y>) + Q(x)
/// with Q(x) = |(I + mean + mean^2) x - z|^2.
double ho_objective(const HigherOrderSpec& hspec, const Vector& x,
                    const std::vector<Matrix>& B_list);

struct HOWorstCase {
  std::vector<Matrix> blocks;
  std::vector<Rank1Covariance> factors;  ///< zero-mean path only
  bool zero_mean_path = false;
  bool rank1 = false;
  std::vector<Index> rank_violations;    ///< agents whose numeric block is not rank 1
  std::vector<std::string> notes;
};

/// Zero mean: the closed-form rank-1 blocks (positive weights do not change
/// the per-agent argmax). General mean: numeric PSD-projected ascent per
/// agent, with a rank report; rank 1 is checked, not assumed.
HOWorstCase ho_worst_case(const HigherOrderSpec& hspec, const Vector& x);

/// Zero-mean robust solve: orthant fixed point of
/// (I + sum_i kappa_i B_i*(s)) x = z. Objective reported un-halved.
RobustSolution ho_solve(const HigherOrderSpec& hspec, const SolveOptions& options = {});

}  // namespace robin
