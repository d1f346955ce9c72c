#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "alo/errors.hpp"
#include "alo/nqp.hpp"
#include "test_support.hpp"

namespace alo {
namespace {

NqpProblem toy_problem() {
  return {DenseMatrix(2, 2, {1.0, 0.1, 0.1, 10.0}), Vector{-80.0, -100.0}, Vector{200.0, 20.0}};
}

// Hx = −h for the 2x2 toy problem by Cramer's rule.
Vector toy_optimum() {
  const double det = 1.0 * 10.0 - 0.1 * 0.1;
  return {(80.0 * 10.0 - 0.1 * 100.0) / det, (1.0 * 100.0 - 0.1 * 80.0) / det};
}

TEST(Rescale, ToyProblemValues) {
  const RescaledProblem r = rescale(toy_problem());
  const double off = 0.1 / std::sqrt(10.0);
  EXPECT_DOUBLE_EQ(r.Q(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(r.Q(1, 1), 1.0);
  EXPECT_DOUBLE_EQ(r.Q(0, 1), off);
  EXPECT_DOUBLE_EQ(r.Q(1, 0), off);
  EXPECT_DOUBLE_EQ(r.q[0], -80.0);
  EXPECT_DOUBLE_EQ(r.q[1], -100.0 / std::sqrt(10.0));
  EXPECT_DOUBLE_EQ(r.scale[0], 1.0);
  EXPECT_DOUBLE_EQ(r.scale[1], std::sqrt(10.0));
}

TEST(Rescale, IdentityIsUnchanged) {
  const NqpProblem p{DenseMatrix::identity(3), Vector{1.0, -2.0, 3.0}, Vector(3, 0.0)};
  const RescaledProblem r = rescale(p);
  EXPECT_EQ(r.Q, p.H);
  EXPECT_EQ(r.q, p.h);
  EXPECT_EQ(r.scale, Vector(3, 1.0));
}

TEST(Rescale, UnitDiagonalAndCosineBound) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const NqpProblem p = testing::random_nqp(6, rng);
    const RescaledProblem r = rescale(p);
    for (Index i = 0; i < 6; ++i) {
      EXPECT_NEAR(r.Q(i, i), 1.0, 1e-15);
      for (Index j = 0; j < 6; ++j) EXPECT_LE(std::abs(r.Q(i, j)), 1.0 + 1e-12);
    }
  }
}

TEST(Rescale, AllZeroDiagonalIsDegenerate) {
  const NqpProblem p{DenseMatrix(2, 2), Vector{1.0, 1.0}, Vector(2, 0.0)};
  EXPECT_THROW(rescale(p), DegenerateProblem);
}

TEST(Validate, RejectsBadProblems) {
  NqpProblem p = toy_problem();
  p.H(0, 1) = 0.2;
  EXPECT_THROW(p.validate(), std::exception);
  p = toy_problem();
  p.x0[0] = -1.0;
  EXPECT_THROW(p.validate(), std::exception);
  p = toy_problem();
  p.h.push_back(0.0);
  EXPECT_THROW(p.validate(), SizeError);
}

TEST(PassiveMask, Examples) {
  EXPECT_EQ(passive_mask(Vector{0.0, 1.0}, Vector{-1.0, 2.0}), (std::vector<bool>{true, true}));
  EXPECT_EQ(passive_mask(Vector{0.0, 2.0}, Vector{3.0, -1.0}), (std::vector<bool>{false, true}));
  EXPECT_EQ(passive_mask(Vector{0.0, 0.0}, Vector{0.0, 4.0}), (std::vector<bool>{false, false}));
  EXPECT_EQ(passive_grad_norm_sq(Vector{0.0, 0.0}, Vector{0.0, 4.0}), 0.0);
}

TEST(LineSearch, IdentityLandsOnOptimum) {
  const DenseMatrix q = DenseMatrix::identity(3);
  const Vector lin{-1.0, -2.0, -0.5};
  Vector x{0.5, 0.3, 2.0};
  Vector g = nqp_gradient(q, lin, x);
  const LineSearchStep s = exact_line_search_step(q, x, g);
  EXPECT_DOUBLE_EQ(s.alpha, 1.0);
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], 2.0, 1e-15);
  EXPECT_NEAR(x[2], 0.5, 1e-15);
  EXPECT_EQ(passive_grad_norm_sq(x, g), 0.0);
}

TEST(LineSearch, ZeroPassiveGradientIsNoOp) {
  const DenseMatrix q = DenseMatrix::identity(2);
  Vector x{0.0, 0.0};
  Vector g{1.0, 2.0};
  const LineSearchStep s = exact_line_search_step(q, x, g);
  EXPECT_FALSE(s.moved);
  EXPECT_EQ(x, (Vector{0.0, 0.0}));
}

TEST(LineSearch, ZeroCurvatureFallsBackToUnitStep) {
  const DenseMatrix q(2, 2);
  Vector x{1.0, 1.0};
  Vector g{0.5, -0.25};
  const LineSearchStep s = exact_line_search_step(q, x, g);
  EXPECT_DOUBLE_EQ(s.alpha, 1.0);
  EXPECT_DOUBLE_EQ(x[0], 0.5);
  EXPECT_DOUBLE_EQ(x[1], 1.25);
}

TEST(GreedyCd, ScalarClosedForm) {
  const DenseMatrix q(1, 1, 1.0);
  Vector x{0.0};
  Vector g{-2.0};
  std::vector<double> objs;
  EXPECT_EQ(greedy_cd_pass(q, x, g, 1, &objs, 0.0), 1u);
  EXPECT_DOUBLE_EQ(x[0], 2.0);
  EXPECT_DOUBLE_EQ(g[0], 0.0);
  ASSERT_EQ(objs.size(), 1u);
  EXPECT_DOUBLE_EQ(objs[0], -2.0);
}

TEST(GreedyCd, AtOptimumExitsEarly) {
  const DenseMatrix q(2, 2, {2.0, 0.5, 0.5, 1.0});
  Vector x{1.0, 2.0};
  const Vector lin{-3.0, -2.5};
  Vector g = nqp_gradient(q, lin, x);
  EXPECT_EQ(greedy_cd_pass(q, x, g, 2), 0u);
  EXPECT_EQ(x, (Vector{1.0, 2.0}));
}

TEST(GreedyCd, TieGoesToLowestIndex) {
  const DenseMatrix q = DenseMatrix::identity(3);
  Vector x{0.0, 0.0, 0.0};
  Vector g{-1.0, -1.0, -1.0};
  greedy_cd_pass(q, x, g, 1);
  EXPECT_EQ(x, (Vector{1.0, 0.0, 0.0}));
}

TEST(GreedyCd, PassNeverIncreasesObjective) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 50; ++t) {
    const NqpProblem p = testing::random_nqp(4, rng);
    Vector x = p.x0;
    Vector g = nqp_gradient(p.H, p.h, x);
    for (int sweep = 0; sweep < 4; ++sweep) {
      const double before = nqp_objective(p.H, p.h, x);
      greedy_cd_pass(p.H, x, g, 1);
      const double after = nqp_objective(p.H, p.h, x);
      EXPECT_LE(after, before + 1e-12 * std::abs(before));
      for (double xi : x) EXPECT_GE(xi, 0.0);
    }
  }
}

TEST(Solve, ToyProblemReachesInteriorOptimum) {
  const Vector expected = toy_optimum();
  ASSERT_GT(expected[0], 0.0);
  ASSERT_GT(expected[1], 0.0);
  StopState stop{0.0, 1e-12};
  const NqpSolution s = solve(toy_problem(), stop);
  EXPECT_LE(s.inner_iterations, 2u);
  EXPECT_NEAR(s.x[0], expected[0], 1e-6 * expected[0]);
  EXPECT_NEAR(s.x[1], expected[1], 1e-6 * expected[1]);
  EXPECT_NEAR(expected[0], 79.0791, 1e-4);
  EXPECT_NEAR(expected[1], 9.2092, 1e-4);
}

TEST(Solve, NonNegativeLinearTermStaysAtOrigin) {
  std::mt19937_64 rng(33);
  NqpProblem p = testing::random_nqp(5, rng);
  for (double& v : p.h) v = std::abs(v);
  p.x0.assign(5, 0.0);
  StopState stop;
  const NqpSolution s = solve(p, stop);
  EXPECT_EQ(s.inner_iterations, 0u);
  EXPECT_EQ(s.x, Vector(5, 0.0));
}

TEST(Solve, MatchesEnumerationOracle) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 60; ++t) {
    const Index r = 2 + t % 5;
    const NqpProblem p = testing::random_nqp(r, rng);
    const auto oracle = testing::enumerate_nqp(p);
    StopState stop{0.0, 1e-30};
    const NqpSolution s = solve(p, stop, 5000);
    EXPECT_NEAR(nqp_objective(p.H, p.h, s.x), oracle.objective, 1e-8) << "trial " << t;
  }
}

TEST(Solve, MonotoneFeasibleAndConsistentGradient) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 30; ++t) {
    const NqpProblem p = testing::random_nqp(8, rng, 1);
    StopState stop{0.0, 1e-20};
    SolveTrace trace;
    trace.check_gradient = true;
    const NqpSolution s = solve(p, stop, 300, &trace);
    ASSERT_FALSE(trace.outer_objective.empty());
    double prev = trace.outer_objective.front();
    for (double f : trace.step_objective) {
      EXPECT_LE(f, prev + 1e-12 * std::abs(prev));
      prev = f;
    }
    for (Index k = 1; k < trace.outer_objective.size(); ++k) {
      EXPECT_LE(trace.outer_objective[k],
                trace.outer_objective[k - 1] + 1e-12 * std::abs(trace.outer_objective[k - 1]));
    }
    EXPECT_LE(trace.max_gradient_drift, 1e-9);
    for (double xi : s.x) EXPECT_GE(xi, 0.0);
  }
}

TEST(Solve, ComplementarityAtTightTolerance) {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 20; ++t) {
    const NqpProblem p = testing::random_nqp(6, rng);
    StopState stop{0.0, 1e-30};
    const NqpSolution s = solve(p, stop, 5000);
    const Vector g = nqp_gradient(p.H, p.h, s.x);
    for (Index i = 0; i < 6; ++i) {
      EXPECT_LE(std::min(s.x[i], std::max(g[i], 0.0)), 1e-7);
      EXPECT_GE(g[i], -1e-7 * (1.0 + std::abs(p.h[i])));
    }
  }
}

TEST(Solve, ScaleInvariance) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int t = 0; t < 20; ++t) {
    const NqpProblem p = testing::random_nqp(5, rng);
    Vector d(5);
    for (double& di : d) di = u(rng);
    NqpProblem scaled = p;
    for (Index i = 0; i < 5; ++i) {
      scaled.h[i] = d[i] * p.h[i];
      scaled.x0[i] = p.x0[i] / d[i];
      for (Index j = 0; j < 5; ++j) scaled.H(i, j) = d[i] * p.H(i, j) * d[j];
    }
    StopState s1{0.0, 1e-24};
    StopState s2{0.0, 1e-24};
    const NqpSolution a = solve(p, s1, 2000);
    const NqpSolution b = solve(scaled, s2, 2000);
    for (Index i = 0; i < 5; ++i) {
      EXPECT_NEAR(b.x[i], a.x[i] / d[i], 1e-6 * (1.0 + std::abs(a.x[i] / d[i])));
    }
  }
}

TEST(Solve, FastBreakExitsAfterOneIteration) {
  std::mt19937_64 rng(38);
  const NqpProblem p = testing::random_nqp(10, rng);
  StopState stop{1e300, 1e-30};
  const NqpSolution s = solve(p, stop, 500);
  EXPECT_EQ(s.inner_iterations, 1u);
}

TEST(Solve, MaxStopGrowsMonotonically) {
  std::mt19937_64 rng(39);
  NqpSolver solver(testing::random_nqp(6, rng).H);
  StopState stop;
  double last = 0.0;
  for (int t = 0; t < 10; ++t) {
    const NqpProblem p = testing::random_nqp(6, rng);
    solver.solve(p.h, p.x0, stop, 500);
    EXPECT_GE(stop.max_stop, last);
    last = stop.max_stop;
  }
  stop.reset();
  EXPECT_EQ(stop.max_stop, 0.0);
}

TEST(Solve, FrozenDimension) {
  DenseMatrix h(3, 3);
  h(0, 0) = 2.0;
  h(2, 2) = 1.0;
  StopState stop{0.0, 1e-20};
  const NqpSolution s = solve({h, Vector{-4.0, 1.0, -1.0}, Vector(3, 1.0)}, stop);
  EXPECT_NEAR(s.x[0], 2.0, 1e-12);
  EXPECT_EQ(s.x[1], 0.0);
  EXPECT_NEAR(s.x[2], 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.grad[1], 1.0);
  StopState stop2;
  EXPECT_THROW(solve({h, Vector{-4.0, -1.0, -1.0}, Vector(3, 1.0)}, stop2), NumericalFailure);
}

TEST(Solve, NonFiniteInputFails) {
  NqpProblem p = toy_problem();
  p.h[0] = NAN;
  StopState stop;
  EXPECT_THROW(solve(p, stop), NumericalFailure);
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(40);
  const NqpProblem p = testing::random_nqp(7, rng);
  const Vector g = nqp_gradient(p.H, p.h, p.x0);
  const double delta = 1e-5;
  for (Index i = 0; i < 7; ++i) {
    Vector xp = p.x0;
    Vector xm = p.x0;
    xp[i] += delta;
    xm[i] -= delta;
    const double fd = (nqp_objective(p.H, p.h, xp) - nqp_objective(p.H, p.h, xm)) / (2 * delta);
    EXPECT_NEAR(fd, g[i], 1e-6 * (1.0 + std::abs(g[i])));
  }
}

}  // namespace
}  // namespace alo
