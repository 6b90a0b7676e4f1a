#include "robin/higher_order.hpp"

#include "robin/solver.hpp"
#include "testing_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace robin;

namespace {

HigherOrderSpec unit_hspec(Index n, double delta) {
  HigherOrderSpec hspec;
  hspec.n = n;
  hspec.mean = Matrix::Zero(n, n);
  hspec.std_dev = Matrix::Ones(n, n);
  hspec.delta = delta;
  hspec.target = Vector::Ones(n);
  return hspec;
}

// Zero-mean saddle-grid oracle: each agent's block is [[1, r],[r, 1]] on a
// correlation grid; the dual ordering solves (I + sum kappa_i B_i) x = z.
double ho_saddle_grid(const HigherOrderSpec& hspec, int points) {
  HOWeights w = ho_weights(hspec);
  double best = -1e300;
  for (int g1 = 0; g1 < points; ++g1) {
    for (int g2 = 0; g2 < points; ++g2) {
      double r1 = 2.0 * g1 / (points - 1) - 1.0;
      double r2 = 2.0 * g2 / (points - 1) - 1.0;
      Matrix b1(2, 2), b2(2, 2);
      b1 << 1.0, r1, r1, 1.0;
      b2 << 1.0, r2, r2, 1.0;
      Matrix A = Matrix::Identity(2, 2) + w.kappa[0] * b1 + w.kappa[1] * b2;
      Vector x = solve_spd(A, hspec.target);
      double value = ho_objective(hspec, x, {b1, b2});
      best = std::max(best, value);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("kappa weights on unit std") {
  HOWeights w = ho_weights(unit_hspec(2, 0.1));
  CHECK(w.kappa[0] == doctest::Approx(0.12).epsilon(1e-15));
  CHECK(w.kappa[1] == doctest::Approx(0.12).epsilon(1e-15));
}

TEST_CASE("kappa sums incoming variances (column sums)") {
  HigherOrderSpec hspec = unit_hspec(2, 1.0);
  hspec.std_dev << 0.0, 2.0, 3.0, 0.0;
  HOWeights w = ho_weights(hspec);
  CHECK(w.kappa[0] == 10.0);  // 1 + 9
  CHECK(w.kappa[1] == 5.0);   // 1 + 4
}

TEST_CASE("kappa tends to delta as delta shrinks") {
  for (double delta : {1e-2, 1e-4, 1e-6}) {
    HOWeights w = ho_weights(unit_hspec(3, delta));
    for (Index i = 0; i < 3; ++i) {
      CHECK(w.kappa[i] / delta == doctest::Approx(1.0).epsilon(3.0 * delta));
      CHECK(w.kappa[i] > 0.0);
    }
  }
}

TEST_CASE("ho objective at x = 0 is the squared target") {
  HigherOrderSpec hspec = unit_hspec(2, 0.1);
  std::vector<Matrix> blocks(2, Matrix::Ones(2, 2));
  CHECK(ho_objective(hspec, Vector::Zero(2), blocks) == 2.0);
}

TEST_CASE("ho objective without uncertainty is minimized at the target") {
  HigherOrderSpec hspec = unit_hspec(2, 0.1);
  std::vector<Matrix> blocks(2, Matrix::Zero(2, 2));
  double at_target = ho_objective(hspec, hspec.target, blocks);
  CHECK(at_target == 0.0);
  Vector off(2);
  off << 1.3, 0.4;
  CHECK(ho_objective(hspec, off, blocks) > 0.0);
}

TEST_CASE("ho objective worked value at delta 0.1") {
  HigherOrderSpec hspec = unit_hspec(2, 0.1);
  Vector x = Vector::Ones(2);
  HOWorstCase wc = ho_worst_case(hspec, x);
  // 2 + 0.12 * 4 * 2 - 4 + 2 = 0.96
  CHECK(ho_objective(hspec, x, wc.blocks) == doctest::Approx(0.96).epsilon(1e-14));
}

TEST_CASE("ho objective is affine in each block") {
  auto rng = testing::make_rng(71);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  HigherOrderSpec hspec = unit_hspec(2, 0.3);
  Vector x(2);
  x << 0.7, -0.4;
  for (int trial = 0; trial < 20; ++trial) {
    double r1 = dist(rng);
    double r2 = dist(rng);
    Matrix b1(2, 2), b2(2, 2), mid(2, 2);
    b1 << 1.0, r1, r1, 1.0;
    b2 << 1.0, r2, r2, 1.0;
    mid = 0.5 * (b1 + b2);
    Matrix other(2, 2);
    other << 1.0, 0.1, 0.1, 1.0;
    double f1 = ho_objective(hspec, x, {b1, other});
    double f2 = ho_objective(hspec, x, {b2, other});
    double fm = ho_objective(hspec, x, {mid, other});
    CHECK(fm == doctest::Approx(0.5 * (f1 + f2)).epsilon(1e-13));
  }
}

TEST_CASE("zero-mean worst case equals the first-order blocks bit for bit") {
  auto rng = testing::make_rng(72);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  HigherOrderSpec hspec = unit_hspec(3, 0.2);
  ProblemSpec shell;
  shell.n = 3;
  shell.mean = Matrix::Zero(3, 3);
  shell.std_dev = hspec.std_dev;
  shell.cost = Matrix::Zero(3, 3);
  shell.target = hspec.target;
  shell.reference = Vector::Zero(3);
  for (int trial = 0; trial < 10; ++trial) {
    Vector x(3);
    for (Index i = 0; i < 3; ++i) {
      double v = dist(rng);
      x[i] = v == 0.0 ? 1.0 : v;
    }
    HOWorstCase ho = ho_worst_case(hspec, x);
    WorstCase first_order = worst_case(SignPattern::of(x), shell);
    REQUIRE(ho.zero_mean_path);
    for (Index i = 0; i < 3; ++i) {
      CHECK(ho.blocks[static_cast<size_t>(i)] ==
            first_order.per_agent[static_cast<size_t>(i)].matrix());
    }
  }
}

TEST_CASE("zero-mean worst case rejects zero entries") {
  HigherOrderSpec hspec = unit_hspec(2, 0.2);
  Vector x(2);
  x << 1.0, 0.0;
  try {
    static_cast<void>(ho_worst_case(hspec, x));
    FAIL("expected ZeroEntry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroEntry);
  }
}

TEST_CASE("general path at zero mean matches the zero-mean path") {
  // The general assembly is normalized at unit delta; at mean zero the two
  // paths must agree.
  HigherOrderSpec zero_mean = unit_hspec(2, 1.0);
  HigherOrderSpec general = zero_mean;
  general.mean(0, 1) = 1e-30;  // forces the general branch, negligible value

  Vector x(2);
  x << 0.8, -0.5;
  HOWorstCase wc = ho_worst_case(zero_mean, x);
  double direct = ho_objective(zero_mean, x, wc.blocks);
  double assembled = ho_objective(general, x, wc.blocks);
  CHECK(assembled == doctest::Approx(direct).epsilon(1e-9));

  HOWorstCase numeric = ho_worst_case(general, x);
  double numeric_value = ho_objective(general, x, numeric.blocks);
  CHECK(numeric_value == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("general-mean worst case is rank 1 under nondegeneracy") {
  HigherOrderSpec hspec;
  hspec.n = 2;
  hspec.mean.resize(2, 2);
  hspec.mean << 0.0, 0.4, 0.3, 0.0;
  hspec.std_dev = Matrix::Ones(2, 2);
  hspec.delta = 1.0;
  hspec.target = Vector::Ones(2);

  Vector x(2);
  x << 1.0, 0.7;
  HOWorstCase wc = ho_worst_case(hspec, x);
  CHECK_FALSE(wc.zero_mean_path);
  CHECK(wc.rank1);
  CHECK(wc.rank_violations.empty());
}

TEST_CASE("general-mean cross-walk matches a two-point realization") {
  // Rows U_i = q_i X_i with independent two-point X_i realize the worst-case
  // correlation structure; the expectation over the 2^n sign combinations
  // must reproduce the assembled objective exactly.
  HigherOrderSpec hspec;
  hspec.n = 2;
  hspec.mean.resize(2, 2);
  hspec.mean << 0.0, 0.4, 0.3, 0.0;
  hspec.std_dev.resize(2, 2);
  hspec.std_dev << 0.0, 0.8, 0.6, 0.0;
  hspec.delta = 1.0;
  hspec.target.resize(2);
  hspec.target << 1.0, -0.5;

  Vector x(2);
  x << 0.9, -0.6;
  SignPattern s = SignPattern::of(x);
  std::vector<Vector> factors;
  for (Index i = 0; i < 2; ++i) {
    Vector q(2);
    for (Index j = 0; j < 2; ++j) q[j] = s[j] * hspec.std_dev(i, j);
    factors.push_back(q);
  }
  std::vector<Matrix> blocks;
  for (const Vector& q : factors) blocks.push_back(Matrix(q * q.transpose()));

  double assembled = ho_objective(hspec, x, blocks);

  double expectation = 0.0;
  for (int mask = 0; mask < 4; ++mask) {
    Matrix G = hspec.mean;
    for (Index i = 0; i < 2; ++i) {
      double flip = (mask >> i) & 1 ? 1.0 : -1.0;
      for (Index j = 0; j < 2; ++j) G(i, j) += flip * factors[static_cast<size_t>(i)][j];
    }
    Vector outcome = x + G * x + G * (G * x);
    expectation += 0.25 * (outcome - hspec.target).squaredNorm();
  }
  CHECK(expectation == doctest::Approx(assembled).epsilon(1e-10));
}

TEST_CASE("ho solve delta to zero recovers the target") {
  HigherOrderSpec hspec = unit_hspec(2, 1e-8);
  RobustSolution sol = ho_solve(hspec);
  CHECK((sol.x_star - hspec.target).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("ho solve matches the saddle grid oracle") {
  HigherOrderSpec hspec = unit_hspec(2, 0.2);
  RobustSolution sol = ho_solve(hspec);
  double oracle = ho_saddle_grid(hspec, 201);
  CHECK(std::abs(sol.objective - oracle) <= 1e-3 * (1.0 + std::abs(sol.objective)));
  CHECK(sol.property_b);
  CHECK(sol.stationarity_residual <= 1e-10);
  CHECK(sol.duality_gap <= 1e-9);
}

TEST_CASE("ho solve is exchangeable on symmetric instances") {
  HigherOrderSpec hspec = unit_hspec(2, 0.2);
  RobustSolution sol = ho_solve(hspec);
  CHECK(std::abs(sol.x_star[0] - sol.x_star[1]) <= 1e-10);
}

TEST_CASE("ho solve rejects nonzero means") {
  HigherOrderSpec hspec = unit_hspec(2, 0.2);
  hspec.mean(0, 1) = 0.5;
  try {
    static_cast<void>(ho_solve(hspec));
    FAIL("expected UnsupportedFeature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedFeature);
  }
}

TEST_CASE("higher-order validation") {
  HigherOrderSpec hspec = unit_hspec(2, 0.2);
  hspec.mean(0, 0) = 0.1;
  CHECK_FALSE(validate_higher_order(hspec).ok());
  hspec.mean(0, 0) = 0.0;
  hspec.delta = 0.0;
  CHECK_FALSE(validate_higher_order(hspec).ok());
}

TEST_CASE("third-order interactions are rejected outright") {
  HigherOrderSpec hspec = unit_hspec(2, 0.2);
  hspec.order = 3;
  try {
    static_cast<void>(ho_solve(hspec));
    FAIL("expected UnsupportedFeature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedFeature);
  }
}
