#include "robin/oracle.hpp"

#include "robin/diagnostics.hpp"
#include "robin/solver.hpp"
#include "scan.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

namespace robin {

namespace {

// The sweeps run on fixed-size matrices so the hot loops never touch the
// heap; the guard below keeps the joint enumeration bounded.
constexpr int pair_count(int n) { return n * (n - 1) / 2; }

void check_size(Index n, const GridSpec& grid) {
  if (n > 3) {
    throw Error(ErrorCode::TooLarge,
                "the brute-force oracle certifies small instances only (n <= 3)");
  }
  if (grid.points_per_axis < 3) {
    throw Error(ErrorCode::InvalidSpec, "grid needs at least 3 points per axis");
  }
}

// Symmetric linspace on [-bound, bound]; both endpoints and (for odd point
// counts) zero are hit exactly.
double grid_value(double bound, long g, int points) {
  return bound * (2.0 * static_cast<double>(g) / static_cast<double>(points - 1) - 1.0);
}

long ipow(long base, int exp) {
  long out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

template <int N>
struct Sweep {
  using Mat = Eigen::Matrix<double, N, N>;
  using Vec = Eigen::Matrix<double, N, 1>;
  static constexpr int kPairs = pair_count(N);

  int points = 0;
  long per_agent = 0;  // points^kPairs
  std::array<std::array<Index, 2>, kPairs == 0 ? 1 : kPairs> pairs{};
  Mat diag_sq;    // row i holds v_ij^2 on its diagonal slot (i, j)
  std::array<std::array<double, kPairs == 0 ? 1 : kPairs>, N> bounds{};

  explicit Sweep(const ProblemSpec& spec, const GridSpec& grid) {
    points = grid.points_per_axis;
    per_agent = ipow(points, kPairs);
    int p = 0;
    for (Index j = 0; j < N; ++j) {
      for (Index k = j + 1; k < N; ++k) {
        pairs[static_cast<size_t>(p)] = {j, k};
        ++p;
      }
    }
    for (Index i = 0; i < N; ++i) {
      for (Index j = 0; j < N; ++j) {
        diag_sq(i, j) = spec.std_dev(i, j) * spec.std_dev(i, j);
      }
      for (int q = 0; q < kPairs; ++q) {
        auto [j, k] = pairs[static_cast<size_t>(q)];
        bounds[static_cast<size_t>(i)][static_cast<size_t>(q)] =
            spec.std_dev(i, j) * spec.std_dev(i, k);
      }
    }
  }

  // combo digits are most-significant-first in pair order
  Mat block(Index agent, long combo) const {
    Mat B = Mat::Zero();
    for (Index j = 0; j < N; ++j) B(j, j) = diag_sq(agent, j);
    long rest = combo;
    for (int q = kPairs; q-- > 0;) {
      long g = rest % points;
      rest /= points;
      auto [j, k] = pairs[static_cast<size_t>(q)];
      double rho = grid_value(bounds[static_cast<size_t>(agent)][static_cast<size_t>(q)], g,
                              points);
      B(j, k) = rho;
      B(k, j) = rho;
    }
    return B;
  }

  // PSD screen at threshold -1e-12 * trace so boundary points survive
  // roundoff. For one or two coordinates every grid point is feasible.
  bool feasible(const Mat& B) const {
    if constexpr (N <= 2) {
      (void)B;
      return true;
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> es;
      es.computeDirect(B, Eigen::EigenvaluesOnly);
      return es.eigenvalues().minCoeff() >= -1e-12 * B.trace();
    }
  }
};

template <int N>
InnerMaxOracle inner_max_impl(const Vector& x, const ProblemSpec& spec, const GridSpec& grid,
                              Exec exec) {
  using S = Sweep<N>;
  S sweep(spec, grid);
  if (sweep.per_agent > grid.max_joint_points) {
    std::ostringstream os;
    os << "per-agent grid has " << sweep.per_agent << " points; cap is "
       << grid.max_joint_points;
    throw Error(ErrorCode::TooLarge, os.str());
  }
  typename S::Vec xf;
  for (Index j = 0; j < N; ++j) xf[j] = x[j];

  InnerMaxOracle out;
  out.aggregate = Matrix::Zero(N, N);
  for (Index i = 0; i < N; ++i) {
    detail::ScanBest best = detail::scan_max(sweep.per_agent, exec, [&](long combo) -> double {
      typename S::Mat B = sweep.block(i, combo);
      if (!sweep.feasible(B)) return std::numeric_limits<double>::quiet_NaN();
      return xf.dot(B * xf);
    });
    if (best.index < 0) {
      throw Error(ErrorCode::EmptyFeasibleSet, "no PSD grid point for an agent block");
    }
    typename S::Mat B = sweep.block(i, best.index);
    out.value += best.value;
    Matrix dense = Matrix::Zero(N, N);
    for (Index j = 0; j < N; ++j) {
      for (Index k = 0; k < N; ++k) dense(j, k) = B(j, k);
    }
    out.aggregate += dense;
    out.per_agent.push_back(std::move(dense));
  }
  return out;
}

template <int N>
SaddleOracle saddle_impl(const ProblemSpec& spec, const GridSpec& grid, Exec exec) {
  using S = Sweep<N>;
  S sweep(spec, grid);

  long joint = 1;
  for (Index i = 0; i < N; ++i) {
    if (sweep.per_agent != 0 && joint > grid.max_joint_points / sweep.per_agent) {
      std::ostringstream os;
      os << "joint grid across agents exceeds " << grid.max_joint_points
         << " points; reduce points_per_axis";
      throw Error(ErrorCode::TooLarge, os.str());
    }
    joint *= sweep.per_agent;
  }

  AggregatedModel model = aggregate(spec);
  typename S::Mat mc;
  typename S::Vec phi;
  for (Index j = 0; j < N; ++j) {
    phi[j] = model.psi0[j] + model.psi[j];
    for (Index k = 0; k < N; ++k) mc(j, k) = model.M(j, k) + spec.cost(j, k);
  }
  const double constant =
      spec.target.squaredNorm() + spec.reference.dot(spec.cost * spec.reference);

  // Per-agent feasibility masks are shared by both orderings.
  std::vector<std::vector<std::uint8_t>> feasible(static_cast<size_t>(N));
  for (Index i = 0; i < N; ++i) {
    auto& mask = feasible[static_cast<size_t>(i)];
    mask.resize(static_cast<size_t>(sweep.per_agent), 1);
    if constexpr (S::kPairs > 0) {
      if (N >= 3) {
        for (long combo = 0; combo < sweep.per_agent; ++combo) {
          mask[static_cast<size_t>(combo)] = sweep.feasible(sweep.block(i, combo)) ? 1 : 0;
        }
      }
    }
  }

  auto decode = [&](long flat, std::array<long, N>& combos) {
    long rest = flat;
    for (Index i = N; i-- > 0;) {
      combos[static_cast<size_t>(i)] = rest % sweep.per_agent;
      rest /= sweep.per_agent;
    }
  };

  // Dual ordering: one PD solve per joint grid covariance; the best
  // responses are kept as primal candidates.
  std::vector<typename S::Vec> candidates(static_cast<size_t>(joint));
  std::vector<std::uint8_t> valid(static_cast<size_t>(joint), 0);

  detail::ScanBest dual = detail::scan_max(joint, exec, [&](long flat) -> double {
    std::array<long, N> combos;
    decode(flat, combos);
    typename S::Mat B = S::Mat::Zero();
    for (Index i = 0; i < N; ++i) {
      if (!feasible[static_cast<size_t>(i)][static_cast<size_t>(combos[static_cast<size_t>(i)])]) {
        return std::numeric_limits<double>::quiet_NaN();
      }
      B += sweep.block(i, combos[static_cast<size_t>(i)]);
    }
    typename S::Mat A = mc + B;
    Eigen::LLT<typename S::Mat> llt(A);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    typename S::Vec x = llt.solve(phi);
    double value = 0.5 * (x.dot(A * x) - 2.0 * phi.dot(x) + constant);
    candidates[static_cast<size_t>(flat)] = x;
    valid[static_cast<size_t>(flat)] = 1;
    return value;
  });
  if (dual.index < 0) {
    throw Error(ErrorCode::EmptyFeasibleSet, "no feasible grid covariance");
  }

  SaddleOracle out;
  out.dual_value = dual.value;
  {
    std::array<long, N> combos;
    decode(dual.index, combos);
    typename S::Mat B = S::Mat::Zero();
    for (Index i = 0; i < N; ++i) B += sweep.block(i, combos[static_cast<size_t>(i)]);
    out.B = Matrix::Zero(N, N);
    for (Index j = 0; j < N; ++j) {
      for (Index k = 0; k < N; ++k) out.B(j, k) = B(j, k);
    }
    out.x.resize(N);
    for (Index j = 0; j < N; ++j) out.x[j] = candidates[static_cast<size_t>(dual.index)][j];
  }

  // Primal ordering: for each saved best response, the inner maximum is
  // scanned over the same per-agent grids (never assumed to sit at a corner).
  detail::ScanBest primal = detail::scan_min(joint, exec, [&](long flat) -> double {
    if (!valid[static_cast<size_t>(flat)]) return std::numeric_limits<double>::quiet_NaN();
    const typename S::Vec& x = candidates[static_cast<size_t>(flat)];

    std::array<double, S::kPairs == 0 ? 1 : S::kPairs> cross;
    for (int q = 0; q < S::kPairs; ++q) {
      auto [j, k] = sweep.pairs[static_cast<size_t>(q)];
      cross[static_cast<size_t>(q)] = 2.0 * x[j] * x[k];
    }

    double inner = 0.0;
    for (Index i = 0; i < N; ++i) {
      double base = 0.0;
      for (Index j = 0; j < N; ++j) base += sweep.diag_sq(i, j) * x[j] * x[j];
      double best_i = -std::numeric_limits<double>::infinity();
      const auto& mask = feasible[static_cast<size_t>(i)];
      for (long combo = 0; combo < sweep.per_agent; ++combo) {
        if (!mask[static_cast<size_t>(combo)]) continue;
        double value = base;
        long rest = combo;
        for (int q = S::kPairs; q-- > 0;) {
          long g = rest % sweep.points;
          rest /= sweep.points;
          value += grid_value(sweep.bounds[static_cast<size_t>(i)][static_cast<size_t>(q)], g,
                              sweep.points) *
                   cross[static_cast<size_t>(q)];
        }
        if (value > best_i) best_i = value;
      }
      inner += best_i;
    }
    return 0.5 * (x.dot(mc * x) - 2.0 * phi.dot(x) + constant + inner);
  });

  out.primal_value = primal.value;
  out.gap = out.primal_value - out.dual_value;
  return out;
}

}  // namespace

InnerMaxOracle oracle_inner_max(const Vector& x, const ProblemSpec& spec, const GridSpec& grid,
                                Exec exec) {
  if (x.size() != spec.n) throw Error(ErrorCode::DimensionMismatch, "x size != n");
  check_size(spec.n, grid);
  switch (spec.n) {
    case 1: return inner_max_impl<1>(x, spec, grid, exec);
    case 2: return inner_max_impl<2>(x, spec, grid, exec);
    default: return inner_max_impl<3>(x, spec, grid, exec);
  }
}

SaddleOracle oracle_saddle(const ProblemSpec& spec, const GridSpec& grid, Exec exec) {
  check_size(spec.n, grid);
  switch (spec.n) {
    case 1: return saddle_impl<1>(spec, grid, exec);
    case 2: return saddle_impl<2>(spec, grid, exec);
    default: return saddle_impl<3>(spec, grid, exec);
  }
}

}  // namespace robin
