#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace robin {

using Index = Eigen::Index;

/// Dense row-major matrix; problems are desk-scale, sparsity is not exploited.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Execution mode for the data-parallel kernels. Serial is the reference
/// path; Parallel must produce bit-identical results (fixed reduction order).
enum class Exec { Serial, Parallel };

enum class ErrorCode {
  DimensionMismatch,
  InvalidSpec,
  FactorizationFailure,
  PropertyBViolation,
  NoFixedPoint,
  TooLarge,
  InfeasiblePins,
  EmptyFeasibleSet,
  ZeroGradient,
  ZeroEntry,
  NondegeneracyFailure,
  MaxIterations,
  RegimeViolation,
  UnsupportedFeature,
  ParseError,
  SchemaViolation,
  NonFinite,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Orthant label: one entry in {+1, -1} per agent, never zero.
struct SignPattern {
  Eigen::VectorXi signs;

  /// Signs of x, mapping zero entries to +1.
  static SignPattern of(const Vector& x);

  Index size() const { return signs.size(); }
  int operator[](Index i) const { return signs[i]; }

  bool operator==(const SignPattern& other) const { return signs == other.signs; }

  /// Entrywise order with +1 before -1, used for deterministic tie-breaks.
  bool lex_before(const SignPattern& other) const;

  std::string to_string() const;
};

}  // namespace robin
