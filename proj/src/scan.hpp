#pragma once

#include "robin/types.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <limits>
#include <utility>
#include <vector>

namespace robin::detail {

// Below this many items the parallel kernels take the serial path outright;
// spinning up a thread team costs more than the scan.
inline constexpr long kParallelGrain = 4096;

struct ScanBest {
  double value = -std::numeric_limits<double>::infinity();
  long index = -1;
};

// Keeps the larger value; ties go to the smaller index, so the result is
// identical to a left-to-right serial scan regardless of scheduling.
inline void merge_max(ScanBest& into, const ScanBest& other) {
  if (other.index < 0) return;
  if (other.value > into.value || (other.value == into.value && other.index < into.index) ||
      into.index < 0) {
    into = other;
  }
}

// Evaluates f(i) for i in [0, count) and returns the maximum with
// smallest-index tie-break. Skipped items are signaled by f returning NaN.
template <class Eval>
ScanBest scan_max(long count, Exec exec, Eval&& f) {
  ScanBest best;
#ifdef _OPENMP
  if (exec == Exec::Parallel && count >= kParallelGrain) {
    int threads = omp_get_max_threads();
    std::vector<ScanBest> locals(static_cast<size_t>(threads));
#pragma omp parallel num_threads(threads)
    {
      int t = omp_get_thread_num();
      ScanBest mine;
#pragma omp for schedule(static)
      for (long i = 0; i < count; ++i) {
        double v = f(i);
        if (v == v && (mine.index < 0 || v > mine.value)) {
          mine.value = v;
          mine.index = i;
        }
      }
      locals[static_cast<size_t>(t)] = mine;
    }
    // Static schedule hands out ascending chunks per thread id; merging in
    // thread order preserves the smallest-index tie-break.
    for (const ScanBest& local : locals) merge_max(best, local);
    return best;
  }
#else
  (void)exec;
#endif
  for (long i = 0; i < count; ++i) {
    double v = f(i);
    if (v == v && (best.index < 0 || v > best.value)) {
      best.value = v;
      best.index = i;
    }
  }
  return best;
}

// Minimizing variant built on scan_max; same determinism contract.
template <class Eval>
ScanBest scan_min(long count, Exec exec, Eval&& f) {
  ScanBest best = scan_max(count, exec, [&](long i) { return -f(i); });
  if (best.index >= 0) best.value = -best.value;
  return best;
}

}  // namespace robin::detail
