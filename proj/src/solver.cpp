#include "robin/solver.hpp"

#include "robin/diagnostics.hpp"
#include "orthant.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace robin {

Vector solve_spd(const Matrix& A, const Vector& rhs, PdSolveInfo* info) {
  PdSolveInfo local;
  Vector x;
  Eigen::LLT<Matrix> llt(A);
  Eigen::PartialPivLU<Matrix> lu;
  if (llt.info() == Eigen::Success) {
    Vector ell = llt.matrixLLT().diagonal();
    local.smallest_pivot = ell.minCoeff();
    local.smallest_pivot *= local.smallest_pivot;
    x = llt.solve(rhs);
  } else {
    local.spd_failed = true;
    lu.compute(A);
    Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
    local.smallest_pivot = pivots.minCoeff();
    double scale = A.cwiseAbs().maxCoeff();
    if (local.smallest_pivot <= 1e-14 * std::max(scale, 1e-300)) {
      std::ostringstream os;
      os << "system is singular; smallest pivot " << local.smallest_pivot;
      throw Error(ErrorCode::FactorizationFailure, os.str());
    }
    x = lu.solve(rhs);
  }

  // One or two refinement passes push the residual to machine level.
  double norm_a = A.cwiseAbs().rowwise().sum().maxCoeff();
  for (int pass = 0; pass < 3; ++pass) {
    Vector r = rhs - A * x;
    if (r.norm() <= 1e-15 * (norm_a * x.norm() + rhs.norm())) break;
    x += local.spd_failed ? Vector(lu.solve(r)) : Vector(llt.solve(r));
    ++local.refinement_steps;
  }

  if (info) *info = local;
  return x;
}

Vector solve_for_orthant(const AggregatedModel& model, const ProblemSpec& spec,
                         const SignPattern& signs, PdSolveInfo* info) {
  WorstCase wc = worst_case(signs, spec);
  Matrix A = model.M + wc.aggregate + spec.cost;
  return solve_spd(A, model.psi0 + model.psi, info);
}

namespace {

double certificate_gap(const ProblemSpec& spec, const AggregatedModel& model, const Vector& x,
                       const Matrix& B_aggregate) {
  const Matrix zero = Matrix::Zero(spec.n, spec.n);
  double max_over_b = objective_value(spec, x, zero) + 0.5 * inner_max_value(x, spec);
  Matrix A = model.M + B_aggregate + spec.cost;
  Vector x_br = solve_spd(A, model.psi0 + model.psi);
  double min_over_x = objective_value(spec, x_br, B_aggregate);
  double f = objective_value(spec, x, B_aggregate);
  return std::abs(max_over_b - min_over_x) / (1.0 + std::abs(f));
}

}  // namespace

RobustSolution solve_robust(const ProblemSpec& spec, const SolveOptions& options) {
  ValidationReport solvable = validate_spec(spec, Strictness::Solve);
  if (!solvable.ok()) {
    throw Error(ErrorCode::InvalidSpec, solvable.summary());
  }

  AggregatedModel model = aggregate(spec);
  Vector phi = model.psi0 + model.psi;

  Eigen::LLT<Matrix> mc_check(Matrix(model.M + spec.cost));
  if (mc_check.info() != Eigen::Success) {
    throw Error(ErrorCode::FactorizationFailure,
                "M + C is not positive definite; the problem has no unique solution");
  }

  const Matrix gram = uncertainty_gram(spec.std_dev, options.exec);
  const Matrix mc = model.M + spec.cost;
  auto conjugated = [&](const SignPattern& s) -> Matrix {
    Matrix B(spec.n, spec.n);
    for (Index j = 0; j < spec.n; ++j) {
      for (Index k = 0; k < spec.n; ++k) B(j, k) = s[j] * s[k] * gram(j, k);
    }
    return B;
  };

  detail::OrthantProblem problem;
  problem.n = spec.n;
  problem.rhs = phi;
  problem.system = [&](const SignPattern& s) -> Matrix { return Matrix(mc + conjugated(s)); };
  problem.gap = [&](const Vector& x, const SignPattern& s) -> double {
    return certificate_gap(spec, model, x, conjugated(s));
  };
  problem.warm_start = solve_spd(mc, phi);

  PdSolveInfo final_info;
  detail::OrthantResult fixed = detail::orthant_fixed_point(problem, options);

  RobustSolution sol;
  sol.worst_case = worst_case(fixed.pattern, spec, options.exec);
  Matrix A = mc + sol.worst_case.aggregate;
  sol.x_star = solve_spd(A, phi, &final_info);
  sol.objective = objective_value(spec, sol.x_star, sol.worst_case.aggregate);
  sol.stationarity_residual = (A * sol.x_star - phi).norm() / (1.0 + phi.norm());
  sol.duality_gap = certificate_gap(spec, model, sol.x_star, sol.worst_case.aggregate);
  sol.orthants_tried = fixed.orthants_tried;
  sol.method = fixed.method;
  sol.property_b = detail::negligible_entries(sol.x_star, options.eps_sign).empty();
  sol.warnings = fixed.warnings;

  ValidationReport strict = validate_spec(spec, Strictness::Strict);
  if (!strict.ok()) {
    sol.warnings.push_back("spec has zero-uncertainty links: " + strict.summary());
  }
  if (final_info.spd_failed) {
    std::ostringstream os;
    os << "PD factorization failed on the final system; pivoted LU used (smallest pivot "
       << final_info.smallest_pivot << ")";
    sol.warnings.push_back(os.str());
  }
  if (sol.stationarity_residual > 1e-10) {
    sol.warnings.push_back("stationarity residual exceeds 1e-10");
  }
  if (sol.duality_gap > 1e-9) {
    sol.warnings.push_back("duality gap exceeds 1e-9");
  }
  return sol;
}

Certificate verify_saddle(const ProblemSpec& spec, const RobustSolution& sol,
                          double tol_stationarity, double tol_gap) {
  AggregatedModel model = aggregate(spec);
  Vector phi = model.psi0 + model.psi;
  const Matrix& B = sol.worst_case.aggregate;

  Certificate cert;
  cert.tol_stationarity = tol_stationarity;
  cert.tol_gap = tol_gap;
  cert.objective = objective_value(spec, sol.x_star, B);

  const Matrix zero = Matrix::Zero(spec.n, spec.n);
  cert.max_over_covariances =
      objective_value(spec, sol.x_star, zero) + 0.5 * inner_max_value(sol.x_star, spec);

  Matrix A = model.M + B + spec.cost;
  Vector x_br = solve_spd(A, phi);
  cert.min_over_interventions = objective_value(spec, x_br, B);

  cert.duality_gap = std::abs(cert.max_over_covariances - cert.min_over_interventions) /
                     (1.0 + std::abs(cert.objective));
  cert.stationarity_residual = (A * sol.x_star - phi).norm() / (1.0 + phi.norm());
  cert.pass = cert.duality_gap <= tol_gap && cert.stationarity_residual <= tol_stationarity;
  return cert;
}

}  // namespace robin
