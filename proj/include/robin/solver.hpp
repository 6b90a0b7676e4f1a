#pragma once

#include "robin/model.hpp"
#include "robin/nature.hpp"
#include "robin/types.hpp"

namespace robin {

struct PdSolveInfo {
  bool spd_failed = false;       ///< Cholesky failed, pivoted LU fallback used
  double smallest_pivot = 0.0;
  int refinement_steps = 0;
};

/// Solve A x = rhs for symmetric positive definite A, with iterative
/// refinement until the residual is at machine level. Falls back to a
/// pivoted LU factorization when the Cholesky factorization fails.
Vector solve_spd(const Matrix& A, const Vector& rhs, PdSolveInfo* info = nullptr);

struct SolveOptions {
  enum class Search { Iterate, Exhaustive };
  Search search = Search::Iterate;
  int max_orthant_iters = 64;
  int n_max_exhaustive = 16;
  /// Entries with |x_i| <= eps_sign * |x|_inf count as zero (non-negligence check).
  double eps_sign = 1e-9;
  /// Return boundary fixed points (negligible entries, property_b false)
  /// instead of failing; used by parameter sweeps that must stay total.
  bool allow_boundary = false;
  Exec exec = Exec::Parallel;
};

struct RobustSolution {
  Vector x_star;
  WorstCase worst_case;
  double objective = 0.0;               ///< f(x*, B*), half-normalized
  double stationarity_residual = 0.0;   ///< |(M+B*+C)x* - psi0 - psi| / (1+|psi0+psi|)
  double duality_gap = 0.0;             ///< |max_B f(x*,B) - min_x f(x,B*)| / (1+|f|)
  long orthants_tried = 0;
  std::string method;                   ///< "sign-iteration" | "exhaustive" | "best-response"
  bool property_b = false;
  std::vector<std::string> warnings;
};

/// One positive definite solve (M + B*(signs) + C) x = psi0 + psi.
Vector solve_for_orthant(const AggregatedModel& model, const ProblemSpec& spec,
                         const SignPattern& signs, PdSolveInfo* info = nullptr);

/// Finds the unique strict-sign orthant fixed point: sign(x*) equal to the
/// pattern that generated B*. Warm-starts from the no-uncertainty solution,
/// then sign iteration with cycle detection, then exhaustive enumeration.
RobustSolution solve_robust(const ProblemSpec& spec, const SolveOptions& options = {});

struct Certificate {
  double objective = 0.0;
  double max_over_covariances = 0.0;   ///< max_B f(x*, B), closed form
  double min_over_interventions = 0.0; ///< min_x f(x, B*), one PD solve
  double duality_gap = 0.0;
  double stationarity_residual = 0.0;
  double tol_gap = 1e-9;
  double tol_stationarity = 1e-10;
  bool pass = false;
};

/// Recomputes both orderings of the saddle value and the stationarity
/// residual for a solution, from scratch.
Certificate verify_saddle(const ProblemSpec& spec, const RobustSolution& sol,
                          double tol_stationarity = 1e-10, double tol_gap = 1e-9);

}  // namespace robin
