// Serial reference vs OpenMP kernels on the three data-parallel sweeps:
// the saddle-grid oracle, the exhaustive orthant search, and the worst-case
// aggregate assembly.
#include "robin/nature.hpp"
#include "robin/oracle.hpp"
#include "robin/solver.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

namespace {

using namespace robin;

ProblemSpec random_spec(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> mean_dist(-1.0, 1.0);
  std::uniform_real_distribution<double> std_dist(0.3 / std::sqrt(static_cast<double>(n)),
                                                  1.5 / std::sqrt(static_cast<double>(n)));
  ProblemSpec spec;
  spec.n = n;
  spec.mean.resize(n, n);
  spec.std_dev.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      spec.mean(i, j) = mean_dist(rng);
      spec.std_dev(i, j) = std_dist(rng);
    }
  }
  spec.cost = ProblemSpec::scaled_identity_cost(n, 2.0);
  spec.target = Vector::Constant(n, 1.0);
  spec.reference = Vector::Zero(n);
  return spec;
}

// Diagonally dominant means with mild uncertainty keep the strict-sign
// solution in the positive orthant, so the timed solve never throws.
ProblemSpec strict_instance(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  std::uniform_real_distribution<double> std_dist(0.05, 0.2);
  ProblemSpec spec;
  spec.n = n;
  spec.mean = Matrix::Identity(n, n);
  spec.std_dev.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      spec.mean(i, j) += jitter(rng);
      spec.std_dev(i, j) = std_dist(rng) / std::sqrt(static_cast<double>(n));
    }
  }
  spec.cost = ProblemSpec::scaled_identity_cost(n, 2.0);
  spec.target = Vector::Constant(n, 1.0);
  spec.reference = Vector::Zero(n);
  return spec;
}

void BM_SaddleOracle(benchmark::State& state, Exec exec) {
  ProblemSpec spec = random_spec(2, 7);
  GridSpec grid;
  grid.points_per_axis = static_cast<int>(state.range(0));
  for (auto _ : state) {
    SaddleOracle oracle = oracle_saddle(spec, grid, exec);
    benchmark::DoNotOptimize(oracle.dual_value);
  }
}

void BM_ExhaustiveOrthants(benchmark::State& state, Exec exec) {
  ProblemSpec spec = strict_instance(static_cast<Index>(state.range(0)), 11);
  SolveOptions options;
  options.search = SolveOptions::Search::Exhaustive;
  options.exec = exec;
  for (auto _ : state) {
    RobustSolution sol = solve_robust(spec, options);
    benchmark::DoNotOptimize(sol.objective);
  }
}

void BM_WorstCaseAggregate(benchmark::State& state, Exec exec) {
  const Index n = static_cast<Index>(state.range(0));
  ProblemSpec spec = random_spec(n, 13);
  SignPattern s;
  s.signs.resize(n);
  for (Index j = 0; j < n; ++j) s.signs[j] = j % 2 ? -1 : 1;
  for (auto _ : state) {
    WorstCase wc = worst_case(s, spec, exec);
    benchmark::DoNotOptimize(wc.aggregate(0, 0));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_SaddleOracle, serial, robin::Exec::Serial)->Arg(201)->Arg(401);
BENCHMARK_CAPTURE(BM_SaddleOracle, parallel, robin::Exec::Parallel)->Arg(201)->Arg(401);
BENCHMARK_CAPTURE(BM_ExhaustiveOrthants, serial, robin::Exec::Serial)->Arg(10)->Arg(12);
BENCHMARK_CAPTURE(BM_ExhaustiveOrthants, parallel, robin::Exec::Parallel)->Arg(10)->Arg(12);
BENCHMARK_CAPTURE(BM_WorstCaseAggregate, serial, robin::Exec::Serial)->Arg(128)->Arg(256);
BENCHMARK_CAPTURE(BM_WorstCaseAggregate, parallel, robin::Exec::Parallel)->Arg(128)->Arg(256);

BENCHMARK_MAIN();
