#pragma once

#include "robin/model.hpp"
#include "robin/solver.hpp"
#include "robin/types.hpp"

namespace robin {

/// f(x, B) = 1/2 (<x,Mx> + <x,Bx> + <x,Cx> - 2<psi0+psi, x> + |z|^2 + <x0, C x0>).
/// The constants are kept so f equals 1/2 E|Gx - z|^2 + 1/2 |C^(1/2)(x - x0)|^2.
double objective_value(const ProblemSpec& spec, const Vector& x, const Matrix& B);

/// Same value with the aggregation precomputed; the hot path for grid sweeps.
double objective_value(const ProblemSpec& spec, const AggregatedModel& model, const Vector& x,
                       const Matrix& B);

/// Both uncertainty-cost matrices. global_cost is PSD and rank 1; local_cost
/// entries are strictly positive whenever the solution has strict signs.
struct UncertaintyCostReport {
  Matrix global_cost;  ///< x* (x) x*
  Matrix local_cost;   ///< (i,j) entry 2 sum_k v_ik |x_j*| |x_k*|
};

UncertaintyCostReport uncertainty_costs(const RobustSolution& sol, const ProblemSpec& spec);

/// Sensitivity of the optimal value to the worst-case covariance: x* (x) x*,
/// positive semi-definite and rank 1. Requires strict signs (property_b).
Matrix global_uncertainty_cost(const RobustSolution& sol);

/// Sensitivity of the worst-case inner value to one link's standard
/// deviation: 2 sum_k v_ik |x_j*| |x_k*|. This is the derivative of the
/// un-halved inner value sum_i (sum_j v_ij |x_j|)^2; reports record which
/// normalization each number uses.
double local_uncertainty_cost(const RobustSolution& sol, const ProblemSpec& spec,
                              Index i, Index j);

Matrix local_uncertainty_cost_matrix(const RobustSolution& sol, const ProblemSpec& spec);

/// Closed form for the symmetric two-agent family
/// (m_11=m_21=m > 1, m_12=m_22=1, v_11=v_21=v, v_12=v_22=1, C=cI, z=(1,1), x0=0)
/// in the first-quadrant regime: x* = ((1+c/2)m - v, v^2 + c/2 - mv) / Delta.
/// Throws RegimeViolation when either component is nonpositive.
Eigen::Vector2d two_agent_solution(double m, double v, double c);

/// Uncertainty threshold vbar(m) = ((m-1) + sqrt(2c(m-1) + (m+1)^2)) / 2;
/// x1* >= x2* iff v <= vbar(m). Strictly increasing and concave in m.
double two_agent_threshold(double m, double c);

}  // namespace robin
