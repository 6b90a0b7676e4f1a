#include "robin/diagnostics.hpp"

#include <cmath>
#include <sstream>

namespace robin {

double objective_value(const ProblemSpec& spec, const AggregatedModel& model, const Vector& x,
                       const Matrix& B) {
  const Index n = spec.n;
  if (x.size() != n || B.rows() != n || B.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "objective arguments inconsistent with n");
  }
  Vector phi = model.psi0 + model.psi;
  double quad = x.dot(model.M * x) + x.dot(B * x) + x.dot(spec.cost * x);
  double constant = spec.target.squaredNorm() + spec.reference.dot(spec.cost * spec.reference);
  return 0.5 * (quad - 2.0 * phi.dot(x) + constant);
}

double objective_value(const ProblemSpec& spec, const Vector& x, const Matrix& B) {
  return objective_value(spec, aggregate(spec), x, B);
}

namespace {

void require_property_b(const RobustSolution& sol) {
  if (!sol.property_b) {
    throw Error(ErrorCode::PropertyBViolation,
                "derivative is well-defined only when the solution has no zero entries");
  }
}

}  // namespace

Matrix global_uncertainty_cost(const RobustSolution& sol) {
  require_property_b(sol);
  return Matrix(sol.x_star * sol.x_star.transpose());
}

double local_uncertainty_cost(const RobustSolution& sol, const ProblemSpec& spec, Index i,
                              Index j) {
  require_property_b(sol);
  const Index n = spec.n;
  if (i < 0 || i >= n || j < 0 || j >= n) {
    throw Error(ErrorCode::DimensionMismatch, "link index out of range");
  }
  double sum = 0.0;
  for (Index k = 0; k < n; ++k) {
    sum += spec.std_dev(i, k) * std::abs(sol.x_star[j]) * std::abs(sol.x_star[k]);
  }
  return 2.0 * sum;
}

Matrix local_uncertainty_cost_matrix(const RobustSolution& sol, const ProblemSpec& spec) {
  require_property_b(sol);
  const Index n = spec.n;
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (Index k = 0; k < n; ++k) row_sum += spec.std_dev(i, k) * std::abs(sol.x_star[k]);
    for (Index j = 0; j < n; ++j) out(i, j) = 2.0 * row_sum * std::abs(sol.x_star[j]);
  }
  return out;
}

UncertaintyCostReport uncertainty_costs(const RobustSolution& sol, const ProblemSpec& spec) {
  return {global_uncertainty_cost(sol), local_uncertainty_cost_matrix(sol, spec)};
}

Eigen::Vector2d two_agent_solution(double m, double v, double c) {
  if (!(m > 1.0) || !(v > 0.0) || !(c > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "two-agent family requires m > 1, v > 0, c > 0");
  }
  double delta = (m * m + v * v + c / 2.0) * (2.0 + c / 2.0) - (m + v) * (m + v);
  double x1 = ((1.0 + c / 2.0) * m - v) / delta;
  double x2 = (v * v + c / 2.0 - m * v) / delta;
  if (!(x1 > 0.0) || !(x2 > 0.0)) {
    std::ostringstream os;
    os << "closed form is valid only in the first quadrant; got (" << x1 << ", " << x2 << ")";
    throw Error(ErrorCode::RegimeViolation, os.str());
  }
  return {x1, x2};
}

double two_agent_threshold(double m, double c) {
  if (!(m >= 1.0) || !(c > 0.0)) {
    throw Error(ErrorCode::InvalidSpec, "threshold requires m >= 1 and c > 0");
  }
  return 0.5 * ((m - 1.0) + std::sqrt(2.0 * c * (m - 1.0) + (m + 1.0) * (m + 1.0)));
}

}  // namespace robin
