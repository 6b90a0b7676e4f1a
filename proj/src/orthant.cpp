#include "orthant.hpp"

#include "scan.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace robin::detail {

namespace {

SignPattern pattern_from_mask(Index n, unsigned long mask) {
  SignPattern s;
  s.signs.resize(n);
  for (Index j = 0; j < n; ++j) s.signs[j] = (mask >> j) & 1u ? -1 : 1;
  return s;
}

struct Candidate {
  unsigned long mask = 0;
  SignPattern pattern;
  Vector x;
  bool strict = false;
  std::vector<Index> zeros;
};

[[noreturn]] void throw_property_b(const std::vector<Index>& zeros) {
  std::ostringstream os;
  os << "solution has negligible entries at indices";
  for (Index i : zeros) os << ' ' << i;
  os << "; the worst case is not guaranteed unique";
  throw Error(ErrorCode::PropertyBViolation, os.str());
}

OrthantResult exhaustive_search(const OrthantProblem& problem, const SolveOptions& options,
                                long already_tried) {
  const Index n = problem.n;
  if (n > options.n_max_exhaustive) {
    std::ostringstream os;
    os << "exhaustive search needs 2^" << n << " solves; cap is n <= "
       << options.n_max_exhaustive;
    throw Error(ErrorCode::TooLarge, os.str());
  }
  const unsigned long total = 1ul << n;

  auto evaluate = [&](unsigned long mask) -> Candidate {
    Candidate cand;
    cand.mask = mask;
    cand.pattern = pattern_from_mask(n, mask);
    cand.x = solve_spd(problem.system(cand.pattern), problem.rhs);
    cand.zeros = negligible_entries(cand.x, options.eps_sign);
    cand.strict = cand.zeros.empty() && SignPattern::of(cand.x) == cand.pattern;
    return cand;
  };

  // A candidate is kept when its sign pattern reproduces itself, strictly or
  // with negligible entries. Collection order is mask-ascending in both modes.
  std::vector<Candidate> consistent;
#ifdef _OPENMP
  bool parallel = options.exec == Exec::Parallel && total >= 64;
#else
  bool parallel = false;
#endif
  if (parallel) {
#ifdef _OPENMP
    int threads = omp_get_max_threads();
    std::vector<std::vector<Candidate>> locals(static_cast<size_t>(threads));
#pragma omp parallel num_threads(threads)
    {
      auto& mine = locals[static_cast<size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
      for (long m = 0; m < static_cast<long>(total); ++m) {
        Candidate cand = evaluate(static_cast<unsigned long>(m));
        SignPattern rounded = SignPattern::of(cand.x);
        bool consistent_signs = cand.strict;
        if (!consistent_signs && !cand.zeros.empty()) {
          // Ignore negligible coordinates when checking consistency.
          consistent_signs = true;
          for (Index j = 0; j < n && consistent_signs; ++j) {
            bool negligible =
                std::find(cand.zeros.begin(), cand.zeros.end(), j) != cand.zeros.end();
            if (!negligible && rounded[j] != cand.pattern[j]) consistent_signs = false;
          }
        }
        if (consistent_signs) mine.push_back(std::move(cand));
      }
    }
    for (auto& local : locals) {
      for (auto& cand : local) consistent.push_back(std::move(cand));
    }
#endif
  } else {
    for (unsigned long m = 0; m < total; ++m) {
      Candidate cand = evaluate(m);
      SignPattern rounded = SignPattern::of(cand.x);
      bool consistent_signs = cand.strict;
      if (!consistent_signs && !cand.zeros.empty()) {
        consistent_signs = true;
        for (Index j = 0; j < n && consistent_signs; ++j) {
          bool negligible =
              std::find(cand.zeros.begin(), cand.zeros.end(), j) != cand.zeros.end();
          if (!negligible && rounded[j] != cand.pattern[j]) consistent_signs = false;
        }
      }
      if (consistent_signs) consistent.push_back(std::move(cand));
    }
  }

  std::vector<Candidate> strict;
  for (auto& cand : consistent) {
    if (cand.strict) strict.push_back(cand);
  }

  if (strict.empty()) {
    if (consistent.empty()) {
      throw Error(ErrorCode::NoFixedPoint,
                  "no orthant yields a sign-consistent solution after exhaustive search");
    }
    if (!options.allow_boundary) throw_property_b(consistent.front().zeros);
    size_t pick = 0;
    for (size_t i = 1; i < consistent.size(); ++i) {
      if (consistent[i].pattern.lex_before(consistent[pick].pattern)) pick = i;
    }
    OrthantResult boundary;
    boundary.x = consistent[pick].x;
    boundary.pattern = consistent[pick].pattern;
    boundary.orthants_tried = already_tried + static_cast<long>(total);
    boundary.method = "exhaustive";
    boundary.zeros = consistent[pick].zeros;
    boundary.warnings.push_back("solution has negligible entries; worst case may not be unique");
    return boundary;
  }

  OrthantResult result;
  result.orthants_tried = already_tried + static_cast<long>(total);
  result.method = "exhaustive";

  size_t pick = 0;
  if (strict.size() > 1) {
    // Theoretically excluded; resolve by the larger verified duality margin
    // (smaller gap), then lexicographically smallest pattern, and warn.
    std::vector<double> gaps(strict.size());
    for (size_t i = 0; i < strict.size(); ++i) gaps[i] = problem.gap(strict[i].x, strict[i].pattern);
    for (size_t i = 1; i < strict.size(); ++i) {
      if (gaps[i] < gaps[pick] ||
          (gaps[i] == gaps[pick] && strict[i].pattern.lex_before(strict[pick].pattern))) {
        pick = i;
      }
    }
    std::ostringstream os;
    os << "multiple strict fixed points (" << strict.size() << "); selected pattern "
       << strict[pick].pattern.to_string() << " by duality margin";
    result.warnings.push_back(os.str());
  }

  result.x = strict[pick].x;
  result.pattern = strict[pick].pattern;
  return result;
}

}  // namespace

std::vector<Index> negligible_entries(const Vector& x, double eps_sign) {
  std::vector<Index> zeros;
  double scale = x.cwiseAbs().maxCoeff();
  for (Index i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) <= eps_sign * scale || scale == 0.0) zeros.push_back(i);
  }
  return zeros;
}

OrthantResult orthant_fixed_point(const OrthantProblem& problem, const SolveOptions& options) {
  if (options.search == SolveOptions::Search::Exhaustive) {
    return exhaustive_search(problem, options, 0);
  }

  SignPattern s = SignPattern::of(problem.warm_start);
  std::set<std::string> visited;
  visited.insert(s.to_string());
  long tried = 0;

  for (int iter = 0; iter < options.max_orthant_iters; ++iter) {
    Vector x = solve_spd(problem.system(s), problem.rhs);
    ++tried;
    SignPattern next = SignPattern::of(x);
    if (next == s) {
      std::vector<Index> zeros = negligible_entries(x, options.eps_sign);
      if (!zeros.empty() && !options.allow_boundary) throw_property_b(zeros);
      OrthantResult result;
      result.x = std::move(x);
      result.pattern = s;
      result.orthants_tried = tried;
      result.method = "sign-iteration";
      result.zeros = zeros;
      if (!zeros.empty()) {
        result.warnings.push_back(
            "solution has negligible entries; worst case may not be unique");
      }
      return result;
    }
    if (visited.count(next.to_string())) break;  // cycle
    visited.insert(next.to_string());
    s = next;
  }

  return exhaustive_search(problem, options, tried);
}

}  // namespace robin::detail
