#include "robin/nature.hpp"

#include "scan.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace robin {

Matrix uncertainty_gram(const Matrix& std_dev, Exec exec) {
  const Index n = std_dev.rows();
  Matrix gram = Matrix::Zero(n, n);
  auto fill_row = [&](Index j) {
    for (Index k = j; k < n; ++k) {
      double sum = 0.0;
      for (Index i = 0; i < n; ++i) sum += std_dev(i, j) * std_dev(i, k);
      gram(j, k) = sum;
      gram(k, j) = sum;
    }
  };
#ifdef _OPENMP
  if (exec == Exec::Parallel && n >= 64) {
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < n; ++j) fill_row(j);
    return gram;
  }
#else
  (void)exec;
#endif
  for (Index j = 0; j < n; ++j) fill_row(j);
  return gram;
}

WorstCase worst_case(const SignPattern& signs, const ProblemSpec& spec, Exec exec) {
  const Index n = spec.n;
  if (signs.size() != n) throw Error(ErrorCode::DimensionMismatch, "sign pattern size != n");
  for (Index i = 0; i < n; ++i) {
    if (signs[i] != 1 && signs[i] != -1) {
      throw Error(ErrorCode::InvalidSpec, "sign pattern entries must be +1 or -1");
    }
  }

  WorstCase wc;
  wc.sign_pattern = signs;
  wc.per_agent.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Rank1Covariance block;
    block.agent = i;
    block.factor.resize(n);
    for (Index j = 0; j < n; ++j) block.factor[j] = signs[j] * spec.std_dev(i, j);
    wc.per_agent.push_back(std::move(block));
  }

  Matrix gram = uncertainty_gram(spec.std_dev, exec);
  wc.aggregate.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      wc.aggregate(j, k) = signs[j] * signs[k] * gram(j, k);
    }
  }
  return wc;
}

double inner_max_value(const Vector& x, const ProblemSpec& spec) {
  const Index n = spec.n;
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "x size != n");
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Index j = 0; j < n; ++j) row += spec.std_dev(i, j) * std::abs(x[j]);
    total += row * row;
  }
  return total;
}

namespace {

// Restores the affine constraints in place: symmetry, fixed diagonal, pins.
void project_affine(Matrix& B, const Vector& diag,
                    const std::vector<std::pair<Index, Index>>& pin_pos,
                    const std::vector<double>& pin_val) {
  B = 0.5 * (B + Matrix(B.transpose()));
  for (Index j = 0; j < B.rows(); ++j) B(j, j) = diag[j];
  for (size_t p = 0; p < pin_pos.size(); ++p) {
    B(pin_pos[p].first, pin_pos[p].second) = pin_val[p];
    B(pin_pos[p].second, pin_pos[p].first) = pin_val[p];
  }
}

// Eigenvalue clipping onto the PSD cone.
void project_psd(Matrix& B) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  Vector eigs = es.eigenvalues();
  bool clipped = false;
  for (Index k = 0; k < eigs.size(); ++k) {
    if (eigs[k] < 0.0) {
      eigs[k] = 0.0;
      clipped = true;
    }
  }
  if (clipped) {
    B = es.eigenvectors() * eigs.asDiagonal() * es.eigenvectors().transpose();
  }
}

double affine_violation(const Matrix& B, const Vector& diag,
                        const std::vector<std::pair<Index, Index>>& pin_pos,
                        const std::vector<double>& pin_val) {
  double worst = 0.0;
  for (Index j = 0; j < B.rows(); ++j) worst = std::max(worst, std::abs(B(j, j) - diag[j]));
  for (size_t p = 0; p < pin_pos.size(); ++p) {
    worst = std::max(worst, std::abs(B(pin_pos[p].first, pin_pos[p].second) - pin_val[p]));
  }
  return worst;
}

// Maximizes trace(B W) over {B symmetric PSD, B_jj = diag_j, pinned entries}
// by gradient ascent with projection back onto the feasible set.
Matrix max_trace_block(const Matrix& W, const Vector& diag,
                       const std::vector<std::pair<Index, Index>>& pin_pos_in,
                       const std::vector<double>& pin_val_in, Index agent, long& iterations) {
  const Index n = diag.size();
  const double scale = std::max(diag.sum(), 1e-300);

  // A zero variance forces its whole row and column to zero (PSD with a zero
  // diagonal entry); pinning them keeps the alternating projections from
  // stalling on the tangent face of the cone.
  std::vector<std::pair<Index, Index>> pin_pos = pin_pos_in;
  std::vector<double> pin_val = pin_val_in;
  for (Index j = 0; j < n; ++j) {
    if (diag[j] == 0.0) {
      for (Index k = 0; k < n; ++k) {
        if (k != j) {
          pin_pos.emplace_back(j, k);
          pin_val.push_back(0.0);
        }
      }
    }
  }

  Matrix B = Matrix(diag.asDiagonal());
  project_affine(B, diag, pin_pos, pin_val);

  // Feasibility phase: alternate projections until the pins survive the PSD
  // clip. If the gap stalls, there is no PSD completion.
  double gap = affine_violation(B, diag, pin_pos, pin_val);
  for (int round = 0; round < 2000; ++round) {
    project_psd(B);
    gap = affine_violation(B, diag, pin_pos, pin_val);
    if (gap <= 1e-12 * scale) break;
    project_affine(B, diag, pin_pos, pin_val);
  }
  if (gap > 1e-8 * scale) {
    std::ostringstream os;
    os << "no PSD completion for agent " << agent << " pins (residual " << gap << ")";
    throw Error(ErrorCode::InfeasiblePins, os.str());
  }
  project_affine(B, diag, pin_pos, pin_val);

  Eigen::SelfAdjointEigenSolver<Matrix> wes(W, Eigen::EigenvaluesOnly);
  double lipschitz = 2.0 * std::max(wes.eigenvalues().maxCoeff(), 1e-300);
  double step = 1.0 / lipschitz;

  double value = (B.array() * W.array()).sum();
  const long max_iters = 10000;
  long it = 0;
  for (; it < max_iters; ++it) {
    Matrix next = B + step * W;
    for (int round = 0; round < 50; ++round) {
      project_affine(next, diag, pin_pos, pin_val);
      project_psd(next);
      if (affine_violation(next, diag, pin_pos, pin_val) <= 1e-13 * scale) break;
    }
    project_affine(next, diag, pin_pos, pin_val);
    double next_value = (next.array() * W.array()).sum();
    B = next;
    if (std::abs(next_value - value) < 1e-10 * (1.0 + std::abs(next_value))) {
      value = next_value;
      ++it;
      break;
    }
    value = next_value;
  }
  iterations += it;
  (void)n;
  return B;
}

}  // namespace

ConstrainedInnerMax constrained_weighted_max(const std::vector<Matrix>& weights,
                                             const Matrix& std_dev,
                                             const std::vector<PinnedEntry>& fixed) {
  const Index n = std_dev.rows();
  if (static_cast<Index>(weights.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "one weight matrix per agent required");
  }

  // Cauchy-Schwarz bounds first: a pin beyond |v_ij v_ik| can never be a covariance.
  for (const PinnedEntry& pin : fixed) {
    if (pin.agent < 0 || pin.agent >= n || pin.row < 0 || pin.row >= n || pin.col < 0 ||
        pin.col >= n || pin.row == pin.col) {
      throw Error(ErrorCode::InvalidSpec, "pin indices out of range");
    }
    double bound = std_dev(pin.agent, pin.row) * std_dev(pin.agent, pin.col);
    if (std::abs(pin.value) > bound + 1e-12 * (1.0 + bound)) {
      std::ostringstream os;
      os << "pin (" << pin.agent << "," << pin.row << "," << pin.col << ") = " << pin.value
         << " exceeds the Cauchy-Schwarz bound " << bound;
      throw Error(ErrorCode::InfeasiblePins, os.str());
    }
  }

  ConstrainedInnerMax result;
  result.aggregate = Matrix::Zero(n, n);
  result.per_agent.reserve(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Vector diag(n);
    for (Index j = 0; j < n; ++j) diag[j] = std_dev(i, j) * std_dev(i, j);
    std::vector<std::pair<Index, Index>> pin_pos;
    std::vector<double> pin_val;
    for (const PinnedEntry& pin : fixed) {
      if (pin.agent == i) {
        pin_pos.emplace_back(pin.row, pin.col);
        pin_val.push_back(pin.value);
      }
    }
    Matrix block = max_trace_block(weights[static_cast<size_t>(i)], diag, pin_pos, pin_val, i,
                                   result.iterations);
    result.value += (block.array() * weights[static_cast<size_t>(i)].array()).sum();
    result.aggregate += block;
    result.per_agent.push_back(std::move(block));
  }
  return result;
}

ConstrainedInnerMax constrained_inner_max(const Vector& x, const ProblemSpec& spec,
                                          const std::vector<PinnedEntry>& fixed) {
  const Index n = spec.n;
  if (x.size() != n) throw Error(ErrorCode::DimensionMismatch, "x size != n");
  Matrix w = x * x.transpose();
  std::vector<Matrix> weights(static_cast<size_t>(n), w);
  return constrained_weighted_max(weights, spec.std_dev, fixed);
}

}  // namespace robin
