#pragma once

#include "robin/solver.hpp"
#include "robin/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace robin::detail {

// Shared fixed-point engine for systems of the form A(s) x = rhs where A
// depends on the orthant only. Used by the main solve and the zero-mean
// higher-order solve.
struct OrthantProblem {
  Index n = 0;
  std::function<Matrix(const SignPattern&)> system;
  Vector rhs;
  Vector warm_start;
  // Duality gap used to rank strict fixed points if several survive; must be
  // a pure function of (x, s) so parallel enumeration stays deterministic.
  std::function<double(const Vector&, const SignPattern&)> gap;
};

struct OrthantResult {
  Vector x;
  SignPattern pattern;
  long orthants_tried = 0;
  std::string method;  // "sign-iteration" | "exhaustive"
  std::vector<Index> zeros;  // negligible entries (boundary solutions only)
  std::vector<std::string> warnings;
};

// Zero entries relative to |x|_inf at the eps_sign threshold.
std::vector<Index> negligible_entries(const Vector& x, double eps_sign);

OrthantResult orthant_fixed_point(const OrthantProblem& problem, const SolveOptions& options);

}  // namespace robin::detail
