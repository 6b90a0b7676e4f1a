#include "robin/expansion.hpp"

#include "robin/solver.hpp"
#include "testing_support.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>

using namespace robin;

namespace {

// Angle between beta and B c through the orthogonal component; acos cannot
// resolve below sqrt(machine eps).
double collinearity_angle(const Vector& beta, const Vector& direction) {
  Vector u = beta / beta.norm();
  Vector v = direction / direction.norm();
  double misalignment = (u - u.dot(v) * v).norm();
  return std::asin(std::min(misalignment, 1.0));
}

// Two existing agents, one entering agent; unit variances everywhere, agent
// 1's block is uncorrelated and agent 2's carries a known correlation rho.
ExpansionSpec example_spec(double rho) {
  ExpansionSpec espec;
  espec.n = 2;
  Matrix b1 = Matrix::Identity(2, 2);
  Matrix b2(2, 2);
  b2 << 1.0, rho, rho, 1.0;
  espec.base_blocks = {b1, b2};
  espec.new_variances = Vector::Ones(3);
  espec.new_agent_std = Vector::Ones(3);
  espec.pinned.assign(2, {});
  espec.x_bar = Vector::Ones(3);
  return espec;
}

}  // namespace

TEST_CASE("unpinned slice maximizer on the unit disk") {
  Vector c(2);
  c << 1.0, 1.0;
  SliceMax sm = slice_ellipsoid_max(Matrix::Identity(2, 2), 1.0, {}, c);
  CHECK(sm.beta[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sm.beta[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sm.boundary_residual <= 1e-10);
}

TEST_CASE("unpinned slice maximizer with correlation") {
  Matrix B(2, 2);
  B << 1.0, 0.5, 0.5, 1.0;
  Vector c(2);
  c << 1.0, 1.0;
  SliceMax sm = slice_ellipsoid_max(B, 1.0, {}, c);
  CHECK(sm.beta[0] == doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(sm.beta[1] == doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(sm.boundary_residual <= 1e-10);
}

TEST_CASE("pinned slice maximizer on the circle") {
  Vector c(2);
  c << 1.0, 0.0;
  SliceMax sm = slice_ellipsoid_max(Matrix::Identity(2, 2), 1.0, {{1, 0.6}}, c);
  CHECK(sm.beta[0] == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(sm.beta[1] == 0.6);
}

TEST_CASE("slice maximizer stays collinear with B c") {
  auto rng = testing::make_rng(61);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix root(3, 3);
    for (Index i = 0; i < 3; ++i) {
      for (Index j = 0; j < 3; ++j) root(i, j) = dist(rng);
    }
    Matrix B = root * root.transpose() + 0.5 * Matrix::Identity(3, 3);
    Vector c(3);
    do {
      for (Index i = 0; i < 3; ++i) c[i] = dist(rng);
    } while (c.norm() < 1e-3);
    double b = 0.5 + std::abs(dist(rng));

    SliceMax sm = slice_ellipsoid_max(B, b, {}, c);
    CHECK(collinearity_angle(sm.beta, Vector(B * c)) <= 1e-8);
    Eigen::LLT<Matrix> llt(B);
    CHECK(std::abs(sm.beta.dot(llt.solve(sm.beta)) - b) <= 1e-10 * b);
  }
}

TEST_CASE("slice maximizer reports empty slices") {
  Vector c(2);
  c << 1.0, 0.0;
  try {
    static_cast<void>(slice_ellipsoid_max(Matrix::Identity(2, 2), 1.0, {{1, 1.5}}, c));
    FAIL("expected EmptyFeasibleSet");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyFeasibleSet);
  }
}

TEST_CASE("slice maximizer reports zero gradients") {
  Vector c = Vector::Zero(2);
  try {
    static_cast<void>(slice_ellipsoid_max(Matrix::Identity(2, 2), 1.0, {}, c));
    FAIL("expected ZeroGradient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroGradient);
  }
}

TEST_CASE("slice maximizer dominates a disk grid") {
  // 401^2 points over the feasible disk never beat the analytic maximizer.
  auto rng = testing::make_rng(62);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix root(2, 2);
    for (Index i = 0; i < 2; ++i) {
      for (Index j = 0; j < 2; ++j) root(i, j) = dist(rng);
    }
    Matrix B = root * root.transpose() + 0.3 * Matrix::Identity(2, 2);
    Vector c(2);
    c << dist(rng) + 1.5, dist(rng) - 1.5;
    double b = 1.0;
    SliceMax sm = slice_ellipsoid_max(B, b, {}, c);

    Eigen::LLT<Matrix> llt(B);
    double radius = std::sqrt(b * B.operatorNorm()) + 1e-9;
    double best_grid = -1e300;
    const int points = 401;
    for (int gi = 0; gi < points; ++gi) {
      for (int gj = 0; gj < points; ++gj) {
        Vector beta(2);
        beta << radius * (2.0 * gi / (points - 1) - 1.0),
            radius * (2.0 * gj / (points - 1) - 1.0);
        if (beta.dot(llt.solve(beta)) > b) continue;
        best_grid = std::max(best_grid, c.dot(beta));
      }
    }
    double step = 2.0 * radius / (points - 1);
    CHECK(best_grid <= c.dot(sm.beta) + 1e-12);
    CHECK(c.dot(sm.beta) - best_grid <= 2.0 * c.norm() * step);
  }
}

TEST_CASE("expansion worst case on the worked three-agent example") {
  ExpandedWorstCase wc = expansion_worst_case(example_spec(0.0));
  CHECK(wc.completions[0][0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(wc.completions[0][1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  // all-ones entering block: rank 1 with trace 3
  Matrix block = wc.new_agent_block.matrix();
  CHECK(block == Matrix::Ones(3, 3));
  CHECK(wc.new_agent_block.trace() == 3.0);
}

TEST_CASE("expansion worst case boundary and orthogonality invariants") {
  for (double rho : {-0.5, 0.0, 0.5}) {
    ExpansionSpec espec = example_spec(rho);
    ExpandedWorstCase wc = expansion_worst_case(espec);
    for (Index i = 0; i < 2; ++i) {
      const Matrix& B = espec.base_blocks[static_cast<size_t>(i)];
      const Vector& beta = wc.completions[static_cast<size_t>(i)];
      Eigen::LLT<Matrix> llt(B);
      CHECK(std::abs(beta.dot(llt.solve(beta)) - espec.new_variances[i]) <= 1e-10);
      Vector c(2);
      c << 2.0, 2.0;  // 2 x3 (x1, x2)
      CHECK(collinearity_angle(beta, Vector(B * c)) <= 1e-8);
    }
    // assembled blocks are PSD completions
    Matrix assembled(3, 3);
    assembled.topLeftCorner(2, 2) = espec.base_blocks[1];
    assembled.block(0, 2, 2, 1) = wc.completions[1];
    assembled.block(2, 0, 1, 2) = wc.completions[1].transpose();
    assembled(2, 2) = espec.new_variances[1];
    Eigen::SelfAdjointEigenSolver<Matrix> es(assembled, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * assembled.trace());
  }
}

TEST_CASE("expansion rejects a zero gradient from the entering agent") {
  ExpansionSpec espec = example_spec(0.0);
  espec.x_bar << 1.0, 1.0, 0.0;
  try {
    static_cast<void>(expansion_worst_case(espec));
    FAIL("expected ZeroGradient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroGradient);
  }
}

TEST_CASE("expansion rejects a zero entry among existing agents") {
  ExpansionSpec espec = example_spec(0.0);
  espec.x_bar << 1.0, 0.0, 1.0;
  try {
    static_cast<void>(expansion_worst_case(espec));
    FAIL("expected ZeroEntry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroEntry);
  }
}

TEST_CASE("solve_expansion converges on the worked example with identity mean") {
  ExpansionSpec espec = example_spec(0.5);
  espec.x_bar.resize(0);
  Matrix mean = Matrix::Identity(3, 3);
  Matrix cost = ProblemSpec::scaled_identity_cost(3, 5.0);
  Vector target = Vector::Ones(3);
  Vector reference = Vector::Zero(3);

  ExpansionSolution expanded = solve_expansion(espec, mean, cost, target, reference);
  const RobustSolution& sol = expanded.solution;
  CHECK(sol.property_b);
  CHECK(sol.stationarity_residual <= 1e-10);
  CHECK(sol.duality_gap <= 1e-8);
  CHECK(sol.method == "best-response");

  // exchangeable existing agents move together when their blocks agree
  ExpansionSpec symmetric = example_spec(0.0);
  symmetric.x_bar.resize(0);
  ExpansionSolution sym =
      solve_expansion(symmetric, mean, cost, target, reference);
  CHECK(std::abs(sym.solution.x_star[0] - sym.solution.x_star[1]) <= 1e-10);
}

TEST_CASE("solve_expansion reduces to the classical solve as the new links vanish") {
  ExpansionSpec espec = example_spec(0.5);
  espec.x_bar.resize(0);
  espec.new_variances = Vector::Constant(3, 1e-20);
  espec.new_agent_std = Vector::Constant(3, 1e-10);

  Matrix mean = Matrix::Identity(3, 3);
  Matrix cost = ProblemSpec::scaled_identity_cost(3, 5.0);
  Vector target = Vector::Ones(3);
  Vector reference = Vector::Zero(3);
  ExpansionSolution expanded = solve_expansion(espec, mean, cost, target, reference);

  Matrix block_diag = Matrix::Zero(3, 3);
  block_diag.topLeftCorner(2, 2) =
      espec.base_blocks[0] + espec.base_blocks[1];
  Matrix A = mean.transpose() * mean + block_diag + cost;
  Vector phi = mean.transpose() * target;
  Vector classical = solve_spd(A, phi);
  CHECK((expanded.solution.x_star - classical).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("pinned expansion completions keep their pins") {
  ExpansionSpec espec = example_spec(0.0);
  espec.pinned[0].push_back({1, 0.6});
  ExpandedWorstCase wc = expansion_worst_case(espec);
  CHECK(wc.completions[0][1] == 0.6);
  CHECK(wc.completions[0][0] == doctest::Approx(0.8).epsilon(1e-12));
}
