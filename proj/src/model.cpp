#include "robin/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace robin {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::InvalidSpec: return "invalid spec";
    case ErrorCode::FactorizationFailure: return "factorization failure";
    case ErrorCode::PropertyBViolation: return "property B violation";
    case ErrorCode::NoFixedPoint: return "no fixed point";
    case ErrorCode::TooLarge: return "too large";
    case ErrorCode::InfeasiblePins: return "infeasible pins";
    case ErrorCode::EmptyFeasibleSet: return "empty feasible set";
    case ErrorCode::ZeroGradient: return "zero gradient";
    case ErrorCode::ZeroEntry: return "zero entry";
    case ErrorCode::NondegeneracyFailure: return "nondegeneracy failure";
    case ErrorCode::MaxIterations: return "max iterations";
    case ErrorCode::RegimeViolation: return "regime violation";
    case ErrorCode::UnsupportedFeature: return "unsupported feature";
    case ErrorCode::ParseError: return "parse error";
    case ErrorCode::SchemaViolation: return "schema violation";
    case ErrorCode::NonFinite: return "non-finite value";
    case ErrorCode::IoError: return "I/O error";
  }
  return "unknown error";
}

SignPattern SignPattern::of(const Vector& x) {
  SignPattern s;
  s.signs.resize(x.size());
  for (Index i = 0; i < x.size(); ++i) s.signs[i] = x[i] < 0.0 ? -1 : 1;
  return s;
}

bool SignPattern::lex_before(const SignPattern& other) const {
  for (Index i = 0; i < signs.size() && i < other.signs.size(); ++i) {
    if (signs[i] != other.signs[i]) return signs[i] > other.signs[i];  // +1 before -1
  }
  return signs.size() < other.signs.size();
}

std::string SignPattern::to_string() const {
  std::string s;
  s.reserve(static_cast<size_t>(signs.size()));
  for (Index i = 0; i < signs.size(); ++i) s += signs[i] > 0 ? '+' : '-';
  return s;
}

Matrix ProblemSpec::scaled_identity_cost(Index n, double c) {
  return Matrix(c * Matrix::Identity(n, n));
}

Matrix ProblemSpec::rank1_cost(double c, Vector p) {
  double norm = p.norm();
  if (norm == 0.0) throw Error(ErrorCode::InvalidSpec, "rank1 cost direction p must be nonzero");
  p /= norm;
  return Matrix(c * (p * p.transpose()));
}

std::string ValidationReport::summary() const {
  if (violations.empty()) return "ok";
  std::ostringstream os;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].field << ": " << violations[i].message;
  }
  return os.str();
}

ValidationReport validate_spec(const ProblemSpec& spec, Strictness strictness) {
  ValidationReport report;
  auto add = [&](const std::string& field, const std::string& message) {
    report.violations.push_back({field, message});
  };

  const Index n = spec.n;
  if (n <= 0) {
    add("n", "number of agents must be positive");
    return report;
  }
  if (spec.mean.rows() != n || spec.mean.cols() != n) add("mean", "must be n x n");
  if (spec.std_dev.rows() != n || spec.std_dev.cols() != n) add("std", "must be n x n");
  if (spec.cost.rows() != n || spec.cost.cols() != n) add("cost", "must be n x n");
  if (spec.target.size() != n) add("target", "must have n entries");
  if (spec.reference.size() != n) add("reference", "must have n entries");
  if (!report.ok()) return report;

  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      double v = spec.std_dev(i, j);
      if (!std::isfinite(v) || v < 0.0 ||
          (strictness == Strictness::Strict && v == 0.0)) {
        std::ostringstream os;
        os << "std must be strictly positive; entry (" << i << "," << j << ") = " << v;
        add("std", os.str());
      }
    }
  }

  double cost_scale = spec.cost.cwiseAbs().maxCoeff();
  double asym = (spec.cost - spec.cost.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(cost_scale, 1.0)) {
    add("cost", "cost not symmetric");
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(spec.cost, Eigen::EigenvaluesOnly);
    double min_eig = es.eigenvalues().minCoeff();
    double max_eig = std::max(std::abs(es.eigenvalues().maxCoeff()), std::abs(min_eig));
    if (min_eig < -1e-10 * std::max(max_eig, 1e-300)) {
      std::ostringstream os;
      os << "cost not positive semi-definite; smallest eigenvalue " << min_eig;
      add("cost", os.str());
    }
  }

  if (!spec.mean.allFinite()) add("mean", "entries must be finite");
  if (!spec.target.allFinite()) add("target", "entries must be finite");
  if (!spec.reference.allFinite()) add("reference", "entries must be finite");
  return report;
}

PropertyAReport check_property_a(const Matrix& M) {
  PropertyAReport report;
  // M is symmetric PSD by construction, so its singular values are its
  // eigenvalues (clamped at zero against roundoff).
  Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
  Vector eigs = es.eigenvalues();
  report.smallest_singular_value = std::max(eigs.minCoeff(), 0.0);
  report.largest_singular_value = std::max(eigs.maxCoeff(), 0.0);
  report.threshold = kRankTolerance;
  report.full_rank =
      report.smallest_singular_value > kRankTolerance * report.largest_singular_value &&
      report.largest_singular_value > 0.0;
  return report;
}

AggregatedModel aggregate(const ProblemSpec& spec) {
  const Index n = spec.n;
  AggregatedModel model;
  model.M = Matrix::Zero(n, n);
  model.psi = Vector::Zero(n);
  model.sigma_sq = Vector::Zero(n);

  // Sequential accumulation in agent order keeps outputs bit-reproducible.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < n; ++k) {
        model.M(j, k) += spec.mean(i, j) * spec.mean(i, k);
      }
      model.psi[j] += spec.target[i] * spec.mean(i, j);
      model.sigma_sq[i] += spec.std_dev(i, j) * spec.std_dev(i, j);
    }
  }
  model.psi0 = spec.cost * spec.reference;
  model.property_a = check_property_a(model.M);
  return model;
}

}  // namespace robin
