#include "robin/higher_order.hpp"

#include "orthant.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace robin {

namespace {

bool mean_is_zero(const HigherOrderSpec& hspec) {
  return hspec.mean.cwiseAbs().maxCoeff() == 0.0;
}

ProblemSpec shell_spec(const HigherOrderSpec& hspec) {
  ProblemSpec spec;
  spec.n = hspec.n;
  spec.mean = hspec.mean;
  spec.std_dev = hspec.std_dev;
  spec.cost = Matrix::Zero(hspec.n, hspec.n);
  spec.target = hspec.target;
  spec.reference = Vector::Zero(hspec.n);
  return spec;
}

void require_general_supported(const HigherOrderSpec& hspec) {
  if (hspec.delta != 1.0) {
    throw Error(ErrorCode::UnsupportedFeature,
                "the general-mean second-order assembly is defined at unit network-effect "
                "strength; rescale the moments instead of delta");
  }
}

}  // namespace

ValidationReport validate_higher_order(const HigherOrderSpec& hspec) {
  if (hspec.order != 2) {
    throw Error(ErrorCode::UnsupportedFeature,
                "interaction orders beyond 2 lose linearity in the covariances; analysis of "
                "higher orders is out of scope");
  }
  ValidationReport report;
  auto add = [&](const std::string& field, const std::string& message) {
    report.violations.push_back({field, message});
  };
  const Index n = hspec.n;
  if (n <= 0) {
    add("n", "number of agents must be positive");
    return report;
  }
  if (hspec.mean.rows() != n || hspec.mean.cols() != n) add("mean", "must be n x n");
  if (hspec.std_dev.rows() != n || hspec.std_dev.cols() != n) add("std", "must be n x n");
  if (hspec.target.size() != n) add("target", "must have n entries");
  if (!(hspec.delta > 0.0)) add("delta", "network-effect strength must be positive");
  if (!report.ok()) return report;

  for (Index i = 0; i < n; ++i) {
    if (std::abs(hspec.mean(i, i)) > 1e-14) {
      add("mean", "diagonal means must be zero (no self-influence)");
      break;
    }
  }
  if ((hspec.std_dev.array() < 0.0).any()) add("std", "entries must be nonnegative");
  return report;
}

HOWeights ho_weights(const HigherOrderSpec& hspec) {
  ValidationReport report = validate_higher_order(hspec);
  if (!report.ok()) throw Error(ErrorCode::InvalidSpec, report.summary());
  const Index n = hspec.n;
  HOWeights w;
  w.kappa.resize(n);
  w.alpha.resize(n);
  // Both weights sum over incoming links, i.e. down column i.
  for (Index i = 0; i < n; ++i) {
    double vsum = 0.0;
    double asum = 0.0;
    for (Index k = 0; k < n; ++k) {
      vsum += hspec.std_dev(k, i) * hspec.std_dev(k, i);
      asum += hspec.std_dev(k, i) * hspec.std_dev(k, i) + hspec.mean(k, i) * hspec.mean(k, i);
    }
    w.kappa[i] = hspec.delta + hspec.delta * hspec.delta * vsum;
    w.alpha[i] = asum;
  }
  return w;
}

Vector ho_propagated(const HigherOrderSpec& hspec, const Vector& x) {
  if (x.size() != hspec.n) throw Error(ErrorCode::DimensionMismatch, "x size != n");
  return Vector(hspec.mean * x + x);
}

double ho_objective(const HigherOrderSpec& hspec, const Vector& x,
                    const std::vector<Matrix>& B_list) {
  const Index n = hspec.n;
  if (x.size() != n || static_cast<Index>(B_list.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "need an intervention and one block per agent");
  }
  for (const Matrix& B : B_list) {
    if (B.rows() != n || B.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "covariance blocks must be n x n");
    }
  }
  HOWeights w = ho_weights(hspec);

  if (mean_is_zero(hspec)) {
    double value = x.squaredNorm() - 2.0 * hspec.target.dot(x) + hspec.target.squaredNorm();
    for (Index i = 0; i < n; ++i) value += w.kappa[i] * x.dot(B_list[static_cast<size_t>(i)] * x);
    return value;
  }

  require_general_supported(hspec);
  Vector y = ho_propagated(hspec, x);
  double value = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Matrix& B = B_list[static_cast<size_t>(i)];
    value += w.alpha[i] * x.dot(B * x) + y.dot(B * y);
  }
  // Q(x): the uncertainty-free part collapses to the mean-propagated residual.
  Vector outcome = x + hspec.mean * x + hspec.mean * (hspec.mean * x);
  value += (outcome - hspec.target).squaredNorm();
  return value;
}

HOWorstCase ho_worst_case(const HigherOrderSpec& hspec, const Vector& x) {
  ValidationReport report = validate_higher_order(hspec);
  if (!report.ok()) throw Error(ErrorCode::InvalidSpec, report.summary());
  const Index n = hspec.n;
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "x size != n");

  HOWorstCase out;
  if (mean_is_zero(hspec)) {
    for (Index j = 0; j < n; ++j) {
      if (x[j] == 0.0) {
        std::ostringstream os;
        os << "x[" << j << "] is zero; the closed-form worst case needs strict signs";
        throw Error(ErrorCode::ZeroEntry, os.str());
      }
    }
    // Positive weights never change a per-agent argmax, so these are exactly
    // the first-order rank-1 blocks.
    WorstCase wc = worst_case(SignPattern::of(x), shell_spec(hspec));
    out.zero_mean_path = true;
    out.rank1 = true;
    for (Rank1Covariance& block : wc.per_agent) {
      out.blocks.push_back(block.matrix());
      out.factors.push_back(std::move(block));
    }
    return out;
  }

  require_general_supported(hspec);
  HOWeights w = ho_weights(hspec);
  Vector y = ho_propagated(hspec, x);

  // W_i = alpha_i x(x)x + y(x)y; the off-diagonal entries are exactly the
  // nondegeneracy quantities that make each agent's maximizer unique.
  std::vector<Matrix> weights;
  weights.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    weights.push_back(Matrix(w.alpha[i] * (x * x.transpose()) + y * y.transpose()));
  }
  std::ostringstream degenerate;
  bool any_degenerate = false;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (Index k = j + 1; k < n; ++k) {
        if (weights[static_cast<size_t>(i)](j, k) == 0.0) {
          degenerate << " (agent " << i << ", pair " << j << "," << k << ")";
          any_degenerate = true;
        }
      }
    }
  }
  if (any_degenerate) {
    throw Error(ErrorCode::NondegeneracyFailure,
                "worst case is not guaranteed unique; zero couplings at" + degenerate.str());
  }

  ConstrainedInnerMax numeric = constrained_weighted_max(weights, hspec.std_dev);
  out.zero_mean_path = false;
  out.blocks = std::move(numeric.per_agent);
  out.rank1 = true;
  for (Index i = 0; i < n; ++i) {
    const Matrix& B = out.blocks[static_cast<size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Matrix> es(B, Eigen::EigenvaluesOnly);
    Vector eigs = es.eigenvalues();
    double largest = eigs[n - 1];
    double second = n >= 2 ? std::abs(eigs[n - 2]) : 0.0;
    if (second > 1e-6 * std::max(largest, 1e-300)) {
      out.rank1 = false;
      out.rank_violations.push_back(i);
    }
  }
  if (!out.rank1) {
    std::ostringstream os;
    os << "numeric worst case has rank above 1 for agents";
    for (Index i : out.rank_violations) os << ' ' << i;
    os << " despite nondegeneracy; recorded, not forced";
    out.notes.push_back(os.str());
  }
  return out;
}

RobustSolution ho_solve(const HigherOrderSpec& hspec, const SolveOptions& options) {
  ValidationReport report = validate_higher_order(hspec);
  if (!report.ok()) throw Error(ErrorCode::InvalidSpec, report.summary());
  if (!mean_is_zero(hspec)) {
    throw Error(ErrorCode::UnsupportedFeature,
                "the second-order robust solve covers the zero-mean model; the general-mean "
                "min-max is available only through best-response experiments");
  }
  const Index n = hspec.n;
  HOWeights w = ho_weights(hspec);
  ProblemSpec shell = shell_spec(hspec);

  // (I + sum_i kappa_i q_i (x) q_i)(s) assembled from the sign-conjugated
  // weighted Gram of the std rows.
  Matrix gram = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      double sum = 0.0;
      for (Index i = 0; i < n; ++i) {
        sum += w.kappa[i] * hspec.std_dev(i, j) * hspec.std_dev(i, k);
      }
      gram(j, k) = sum;
    }
  }
  auto system = [&](const SignPattern& s) -> Matrix {
    Matrix A(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < n; ++k) {
        A(j, k) = (j == k ? 1.0 : 0.0) + s[j] * s[k] * gram(j, k);
      }
    }
    return A;
  };

  auto weighted_inner_max = [&](const Vector& x) -> double {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      double row = 0.0;
      for (Index j = 0; j < n; ++j) row += hspec.std_dev(i, j) * std::abs(x[j]);
      total += w.kappa[i] * row * row;
    }
    return total;
  };
  auto base_value = [&](const Vector& x) -> double {
    return x.squaredNorm() - 2.0 * hspec.target.dot(x) + hspec.target.squaredNorm();
  };

  detail::OrthantProblem problem;
  problem.n = n;
  problem.rhs = hspec.target;
  problem.warm_start = hspec.target;  // delta -> 0 limit
  problem.system = system;
  problem.gap = [&](const Vector& x, const SignPattern& s) -> double {
    Matrix A = system(s);
    Vector x_br = solve_spd(A, hspec.target);
    WorstCase wc = worst_case(s, shell, options.exec);
    double min_over_x = base_value(x_br);
    for (Index i = 0; i < n; ++i) {
      min_over_x += w.kappa[i] * x_br.dot(wc.per_agent[static_cast<size_t>(i)].matrix() * x_br);
    }
    double max_over_b = base_value(x) + weighted_inner_max(x);
    double f = base_value(x);
    for (Index i = 0; i < n; ++i) {
      f += w.kappa[i] * x.dot(wc.per_agent[static_cast<size_t>(i)].matrix() * x);
    }
    return std::abs(max_over_b - min_over_x) / (1.0 + std::abs(f));
  };

  detail::OrthantResult fixed = detail::orthant_fixed_point(problem, options);

  RobustSolution sol;
  sol.x_star = fixed.x;
  sol.worst_case = worst_case(fixed.pattern, shell, options.exec);
  sol.method = fixed.method;
  sol.orthants_tried = fixed.orthants_tried;
  sol.warnings = fixed.warnings;
  sol.property_b = detail::negligible_entries(sol.x_star, options.eps_sign).empty();

  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<size_t>(n));
  for (const Rank1Covariance& block : sol.worst_case.per_agent) blocks.push_back(block.matrix());
  sol.objective = ho_objective(hspec, sol.x_star, blocks);

  Matrix A = system(fixed.pattern);
  sol.stationarity_residual =
      (A * sol.x_star - hspec.target).norm() / (1.0 + hspec.target.norm());
  sol.duality_gap = problem.gap(sol.x_star, fixed.pattern);
  return sol;
}

}  // namespace robin
