#include "robin/expansion.hpp"

#include "robin/diagnostics.hpp"
#include "orthant.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace robin {

ValidationReport validate_expansion(const ExpansionSpec& espec) {
  ValidationReport report;
  auto add = [&](const std::string& field, const std::string& message) {
    report.violations.push_back({field, message});
  };
  const Index n = espec.n;
  if (n <= 0) {
    add("n", "need at least one existing agent");
    return report;
  }
  if (static_cast<Index>(espec.base_blocks.size()) != n) add("base_blocks", "need one block per existing agent");
  if (espec.new_variances.size() != n + 1) add("new_variances", "need n+1 entries");
  if (espec.new_agent_std.size() != n + 1) add("new_agent_std", "need n+1 entries");
  if (!espec.pinned.empty() && static_cast<Index>(espec.pinned.size()) != n) {
    add("pinned", "need one (possibly empty) pin list per existing agent");
  }
  if (!report.ok()) return report;

  for (Index i = 0; i < n; ++i) {
    const Matrix& B = espec.base_blocks[static_cast<size_t>(i)];
    std::ostringstream field;
    field << "base_blocks[" << i << "]";
    if (B.rows() != n || B.cols() != n) {
      add(field.str(), "must be n x n");
      continue;
    }
    double scale = std::max(B.cwiseAbs().maxCoeff(), 1.0);
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      add(field.str(), "must be symmetric");
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(B, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-12 * scale) {
      add(field.str(), "must be positive definite");
    }
  }
  for (Index i = 0; i < n + 1; ++i) {
    if (!(espec.new_variances[i] > 0.0)) add("new_variances", "entries must be positive");
    if (espec.new_agent_std[i] < 0.0) add("new_agent_std", "entries must be nonnegative");
  }
  for (size_t i = 0; i < espec.pinned.size(); ++i) {
    for (const PinnedCoordinate& pin : espec.pinned[i]) {
      if (pin.coordinate < 0 || pin.coordinate >= n) add("pinned", "coordinate out of range");
    }
  }
  return report;
}

SliceMax slice_ellipsoid_max(const Matrix& B, double b,
                             const std::vector<PinnedCoordinate>& pinned, const Vector& c) {
  const Index k = B.rows();
  if (B.cols() != k || c.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "block and gradient sizes disagree");
  }
  if (b < 0.0) throw Error(ErrorCode::InvalidSpec, "ellipsoid radius b must be nonnegative");

  Eigen::LLT<Matrix> llt(B);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::FactorizationFailure, "known covariance block is not positive definite");
  }
  Matrix inv = llt.solve(Matrix::Identity(k, k));

  std::vector<bool> is_pinned(static_cast<size_t>(k), false);
  Vector beta = Vector::Zero(k);
  for (const PinnedCoordinate& pin : pinned) {
    if (pin.coordinate < 0 || pin.coordinate >= k) {
      throw Error(ErrorCode::InvalidSpec, "pinned coordinate out of range");
    }
    if (is_pinned[static_cast<size_t>(pin.coordinate)]) {
      throw Error(ErrorCode::InvalidSpec, "coordinate pinned twice");
    }
    is_pinned[static_cast<size_t>(pin.coordinate)] = true;
    beta[pin.coordinate] = pin.value;
  }

  std::vector<Index> free;
  for (Index j = 0; j < k; ++j) {
    if (!is_pinned[static_cast<size_t>(j)]) free.push_back(j);
  }
  if (free.empty()) {
    // Fully pinned slice: a single point, feasible or not.
    double q = beta.dot(inv * beta);
    if (q > b * (1.0 + 1e-10) + 1e-300) {
      throw Error(ErrorCode::EmptyFeasibleSet, "pins lie outside the PSD-completable ellipsoid");
    }
    SliceMax out;
    out.beta = beta;
    out.boundary_residual = std::abs(q - b) / std::max(b, 1e-300);
    return out;
  }

  const Index nf = static_cast<Index>(free.size());
  Vector c_free(nf);
  for (Index a = 0; a < nf; ++a) c_free[a] = c[free[static_cast<size_t>(a)]];
  if (c_free.cwiseAbs().maxCoeff() == 0.0) {
    throw Error(ErrorCode::ZeroGradient,
                "objective does not depend on the free coordinates; maximizer is not unique");
  }

  Matrix inv_ff(nf, nf);
  for (Index a = 0; a < nf; ++a) {
    for (Index d = 0; d < nf; ++d) {
      inv_ff(a, d) = inv(free[static_cast<size_t>(a)], free[static_cast<size_t>(d)]);
    }
  }
  // Cross term A_FI beta_I, taken from the full product with beta_F zeroed.
  Vector beta_pinned_only = beta;
  Vector cross = inv * beta_pinned_only;
  Vector cross_free(nf);
  for (Index a = 0; a < nf; ++a) cross_free[a] = cross[free[static_cast<size_t>(a)]];

  Eigen::LLT<Matrix> llt_ff(inv_ff);
  if (llt_ff.info() != Eigen::Success) {
    throw Error(ErrorCode::FactorizationFailure, "free-coordinate block lost definiteness");
  }
  Vector mu = llt_ff.solve(Vector(-cross_free));

  double q_pinned = beta_pinned_only.dot(inv * beta_pinned_only);
  double radius_sq = b - q_pinned + mu.dot(inv_ff * mu);
  double scale = std::max(b, 1e-300);
  if (radius_sq < -1e-10 * scale) {
    throw Error(ErrorCode::EmptyFeasibleSet, "pins lie outside the PSD-completable ellipsoid");
  }
  radius_sq = std::max(radius_sq, 0.0);

  // KKT: c_F = 2 lambda A_FF (beta_F - mu); the multiplier comes from the
  // boundary equation, the strictly convex slice makes it unique.
  Vector direction = llt_ff.solve(c_free);
  double curvature = c_free.dot(direction);
  double radius = std::sqrt(radius_sq);
  double stretch = curvature > 0.0 ? radius / std::sqrt(curvature) : 0.0;

  SliceMax out;
  out.beta = beta;
  for (Index a = 0; a < nf; ++a) {
    out.beta[free[static_cast<size_t>(a)]] = mu[a] + stretch * direction[a];
  }
  out.multiplier = radius > 0.0 ? std::sqrt(curvature) / (2.0 * radius)
                                : std::numeric_limits<double>::infinity();
  double q = out.beta.dot(inv * out.beta);
  out.boundary_residual = std::abs(q - b) / scale;
  return out;
}

ExpandedWorstCase expansion_worst_case(const ExpansionSpec& espec, const Vector& x_bar) {
  ValidationReport report = validate_expansion(espec);
  if (!report.ok()) throw Error(ErrorCode::InvalidSpec, report.summary());
  const Index n = espec.n;
  if (x_bar.size() != n + 1) {
    throw Error(ErrorCode::DimensionMismatch, "x_bar must have n+1 entries");
  }

  // The linear coefficient of beta_j in <x, B_i x> is 2 x_{n+1} x_j. A zero
  // gradient on every free coordinate breaks uniqueness before a zero entry
  // breaks the new agent's sign pattern, so it is checked first.
  Vector gradient(n);
  for (Index j = 0; j < n; ++j) gradient[j] = 2.0 * x_bar[n] * x_bar[j];

  ExpandedWorstCase out;
  out.completions.resize(static_cast<size_t>(n));
  std::vector<std::vector<PinnedCoordinate>> pins(static_cast<size_t>(n));
  if (!espec.pinned.empty()) pins = espec.pinned;

  for (Index i = 0; i < n; ++i) {
    SliceMax sm = slice_ellipsoid_max(espec.base_blocks[static_cast<size_t>(i)],
                                      espec.new_variances[i], pins[static_cast<size_t>(i)],
                                      gradient);
    out.completions[static_cast<size_t>(i)] = std::move(sm.beta);
  }

  for (Index j = 0; j < n + 1; ++j) {
    if (x_bar[j] == 0.0) {
      std::ostringstream os;
      os << "x_bar[" << j << "] is zero; the new agent's block has no defined sign pattern";
      throw Error(ErrorCode::ZeroEntry, os.str());
    }
  }

  SignPattern signs = SignPattern::of(x_bar);
  out.new_agent_block.agent = n;
  out.new_agent_block.factor.resize(n + 1);
  for (Index j = 0; j < n + 1; ++j) {
    out.new_agent_block.factor[j] = signs[j] * espec.new_agent_std[j];
  }

  out.aggregate = Matrix::Zero(n + 1, n + 1);
  for (Index i = 0; i < n; ++i) {
    const Matrix& base = espec.base_blocks[static_cast<size_t>(i)];
    const Vector& beta = out.completions[static_cast<size_t>(i)];
    out.aggregate.topLeftCorner(n, n) += base;
    out.aggregate.block(0, n, n, 1) += beta;
    out.aggregate.block(n, 0, 1, n) += beta.transpose();
    out.aggregate(n, n) += espec.new_variances[i];
  }
  out.aggregate += out.new_agent_block.matrix();
  return out;
}

ExpandedWorstCase expansion_worst_case(const ExpansionSpec& espec) {
  if (espec.x_bar.size() == 0) {
    throw Error(ErrorCode::InvalidSpec, "expansion spec carries no intervention x_bar");
  }
  return expansion_worst_case(espec, espec.x_bar);
}

ExpansionSolution solve_expansion(const ExpansionSpec& espec, const Matrix& mean,
                                  const Matrix& cost, const Vector& target,
                                  const Vector& reference, const ExpansionOptions& options) {
  ValidationReport report = validate_expansion(espec);
  if (!report.ok()) throw Error(ErrorCode::InvalidSpec, report.summary());
  const Index n1 = espec.n + 1;
  if (mean.rows() != n1 || mean.cols() != n1 || cost.rows() != n1 || cost.cols() != n1 ||
      target.size() != n1 || reference.size() != n1) {
    throw Error(ErrorCode::DimensionMismatch, "expanded problem data must cover n+1 agents");
  }

  // Aggregate the mean-side quantities; std entries do not enter here.
  ProblemSpec shell;
  shell.n = n1;
  shell.mean = mean;
  shell.std_dev = Matrix::Ones(n1, n1);
  shell.cost = cost;
  shell.target = target;
  shell.reference = reference;
  AggregatedModel model = aggregate(shell);
  Vector phi = model.psi0 + model.psi;

  // Start from the DM's response to the fully decoupled covariance guess.
  Matrix B0 = Matrix::Zero(n1, n1);
  for (Index i = 0; i < espec.n; ++i) {
    B0.topLeftCorner(espec.n, espec.n) += espec.base_blocks[static_cast<size_t>(i)];
    B0(espec.n, espec.n) += espec.new_variances[i];
  }
  for (Index j = 0; j < n1; ++j) {
    B0(j, j) += espec.new_agent_std[j] * espec.new_agent_std[j];
  }
  Vector x = solve_spd(Matrix(model.M + B0 + cost), phi);

  ExpandedWorstCase worst;
  long iterations = 0;
  bool converged = false;
  for (; iterations < options.max_iterations; ++iterations) {
    worst = expansion_worst_case(espec, x);
    Vector best_response = solve_spd(Matrix(model.M + worst.aggregate + cost), phi);
    Vector next = (1.0 - options.damping) * x + options.damping * best_response;
    double step = (next - x).norm();
    x = next;
    if (step <= options.tol * (1.0 + x.norm())) {
      converged = true;
      ++iterations;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "best-response iteration did not converge in " << options.max_iterations
       << " iterations";
    throw Error(ErrorCode::MaxIterations, os.str());
  }

  // Undamped polish drives the fixed-point residual to solve accuracy.
  for (int polish = 0; polish < 64; ++polish) {
    worst = expansion_worst_case(espec, x);
    Vector next = solve_spd(Matrix(model.M + worst.aggregate + cost), phi);
    double step = (next - x).norm();
    x = next;
    if (step <= 1e-14 * (1.0 + x.norm())) break;
  }
  worst = expansion_worst_case(espec, x);

  ExpansionSolution out;
  out.iterations = iterations;
  out.worst = worst;

  RobustSolution& sol = out.solution;
  sol.x_star = x;
  sol.worst_case.aggregate = worst.aggregate;
  sol.worst_case.sign_pattern = SignPattern::of(x);
  sol.worst_case.per_agent.push_back(worst.new_agent_block);
  sol.method = "best-response";
  sol.orthants_tried = iterations;

  Matrix A = model.M + worst.aggregate + cost;
  sol.objective = objective_value(shell, model, x, worst.aggregate);
  sol.stationarity_residual = (A * x - phi).norm() / (1.0 + phi.norm());

  // Both-sided certificate: Nature's value at x against the DM's value at B.
  double inner = 0.0;
  for (Index i = 0; i < espec.n; ++i) {
    const Matrix& base = espec.base_blocks[static_cast<size_t>(i)];
    const Vector& beta = worst.completions[static_cast<size_t>(i)];
    Vector head = x.head(espec.n);
    inner += head.dot(base * head) + 2.0 * x[espec.n] * beta.dot(head) +
             espec.new_variances[i] * x[espec.n] * x[espec.n];
  }
  double new_row = 0.0;
  for (Index j = 0; j < n1; ++j) new_row += espec.new_agent_std[j] * std::abs(x[j]);
  inner += new_row * new_row;
  const Matrix zero = Matrix::Zero(n1, n1);
  double max_over_b = objective_value(shell, model, x, zero) + 0.5 * inner;
  double min_over_x =
      objective_value(shell, model, Vector(solve_spd(A, phi)), worst.aggregate);
  sol.duality_gap =
      std::abs(max_over_b - min_over_x) / (1.0 + std::abs(sol.objective));
  sol.property_b = detail::negligible_entries(x, options.eps_sign).empty();
  sol.warnings.push_back("expansion solve is experimental: best-response iteration without a convergence guarantee");
  return out;
}

}  // namespace robin
