#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "alo/errors.hpp"
#include "alo/nmf.hpp"
#include "test_support.hpp"

namespace alo {
namespace {

using testing::planted;
using testing::random_uniform;

// Columns of a permutation-scaled identity are orthonormal and non-negative.
DenseMatrix orthonormal_columns(Index n, Index r) {
  DenseMatrix g(n, r);
  for (Index k = 0; k < r; ++k) g(k * 2, k) = 1.0;
  return g;
}

TEST(Config, Validation) {
  NmfConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.rank = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.mu2 = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.workers = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(EStepProblem, UnregularizedReduction) {
  std::mt19937_64 rng(51);
  const DenseMatrix g = random_uniform(6, 3, rng);
  const DenseMatrix v = random_uniform(6, 4, rng);
  const DenseMatrix q = gram(g);
  NmfConfig cfg;
  cfg.rank = 3;
  const NqpProblem p = build_estep_problem(q, DataMatrix{v}, 2, g, cfg, Vector(3, 0.0));
  EXPECT_EQ(p.H, q);
  for (Index k = 0; k < 3; ++k) {
    double s = 0.0;
    for (Index i = 0; i < 6; ++i) s += g(i, k) * v(i, 2);
    EXPECT_NEAR(p.h[k], -s, 1e-14);
  }
}

TEST(EStepProblem, RegularizersShiftTheRightTerms) {
  std::mt19937_64 rng(52);
  const DenseMatrix g = random_uniform(5, 2, rng);
  const DenseMatrix v = random_uniform(5, 3, rng);
  const DenseMatrix q = gram(g);
  NmfConfig plain;
  plain.rank = 2;
  NmfConfig reg = plain;
  reg.mu1 = 0.5;
  reg.mu2 = 0.25;
  const auto a = build_estep_problem(q, DataMatrix{v}, 0, g, plain, Vector(2, 0.0));
  const auto b = build_estep_problem(q, DataMatrix{v}, 0, g, reg, Vector(2, 0.0));
  for (Index k = 0; k < 2; ++k) {
    EXPECT_DOUBLE_EQ(b.h[k], a.h[k] + 0.5);
    EXPECT_DOUBLE_EQ(b.H(k, k), a.H(k, k) + 0.5);
  }
  EXPECT_DOUBLE_EQ(b.H(0, 1), a.H(0, 1));
}

TEST(EStepProblem, OrthonormalFactorGivesClosedForm) {
  std::mt19937_64 rng(53);
  const DenseMatrix g = orthonormal_columns(8, 3);
  const DenseMatrix v = random_uniform(8, 5, rng, -1.0, 1.0);
  NmfConfig cfg;
  cfg.rank = 3;
  for (Index j = 0; j < 5; ++j) {
    // V may carry negative entries here; only the algebra is under test.
    NqpProblem p{gram(g), Vector(3), Vector(3, 0.5)};
    for (Index k = 0; k < 3; ++k) {
      double s = 0.0;
      for (Index i = 0; i < 8; ++i) s += g(i, k) * v(i, j);
      p.h[k] = -s;
    }
    StopState stop{0.0, 1e-20};
    const NqpSolution sol = solve(p, stop);
    for (Index k = 0; k < 3; ++k) EXPECT_NEAR(sol.x[k], std::max(0.0, -p.h[k]), 1e-8);
  }
}

TEST(MStepProblem, OrthonormalRowsAndZeroRow) {
  std::mt19937_64 rng(54);
  const DenseMatrix f = orthonormal_columns(7, 3).transposed();
  const DenseMatrix h_f = outer_gram(f);
  DenseMatrix y = random_uniform(3, 4, rng, -1.0, 2.0);
  for (Index k = 0; k < 3; ++k) y(k, 3) = 0.0;
  NmfConfig cfg;
  cfg.rank = 3;
  for (Index j = 0; j < 4; ++j) {
    const NqpProblem p = build_mstep_problem(h_f, y, j, cfg, Vector(3, 1.0));
    StopState stop{0.0, 1e-20};
    const NqpSolution sol = solve(p, stop);
    for (Index k = 0; k < 3; ++k) EXPECT_NEAR(sol.x[k], std::max(0.0, y(k, j)), 1e-8);
  }
  EXPECT_THROW(build_mstep_problem(h_f, y, 4, cfg, Vector(3, 0.0)), BoundsError);
}

TEST(MStepProblem, TransposedDataGivesEStepShape) {
  const auto pl = planted(6, 4, 2, 56);
  const DenseMatrix vt = pl.V.transposed();
  NmfConfig cfg;
  cfg.rank = 2;
  // Row j of the M-step on V equals column j of the E-step on Vᵀ with F as the factor.
  const DenseMatrix ft = pl.F.transposed();
  const DenseMatrix y = multiply(pl.F, pl.V.transposed());
  for (Index j = 0; j < 6; ++j) {
    const auto a = build_mstep_problem(outer_gram(pl.F), y, j, cfg, Vector(2, 0.0));
    const auto b = build_estep_problem(gram(ft), DataMatrix{vt}, j, ft, cfg, Vector(2, 0.0));
    for (Index k = 0; k < 2; ++k) {
      EXPECT_NEAR(a.h[k], b.h[k], 1e-12);
      for (Index l = 0; l < 2; ++l) EXPECT_NEAR(a.H(k, l), b.H(k, l), 1e-12);
    }
  }
}

TEST(Objective, WeightsOffEqualsFrobenius) {
  const auto pl = planted(7, 5, 2, 57);
  std::mt19937_64 rng(58);
  const NmfModel model{random_uniform(7, 2, rng), random_uniform(2, 5, rng)};
  NmfConfig cfg;
  cfg.rank = 2;
  EXPECT_DOUBLE_EQ(regularized_objective(DataMatrix{pl.V}, model, cfg),
                   frobenius_objective(pl.V, model.G, model.F));
  const NmfModel zero{DenseMatrix(7, 2), DenseMatrix(2, 5)};
  EXPECT_DOUBLE_EQ(regularized_objective(DataMatrix{pl.V}, zero, cfg),
                   0.5 * squared_norm(DataMatrix{pl.V}));
}

TEST(Objective, ResidualMatchesNaiveOracle) {
  std::mt19937_64 rng(59);
  for (int t = 0; t < 10; ++t) {
    const SparseMatrix v = testing::random_sparse(20, 15, 0.2, rng);
    const DenseMatrix g = random_uniform(20, 3, rng);
    const DenseMatrix f = random_uniform(3, 15, rng);
    const DenseMatrix gt = g.transposed();
    const double gf = dot(gram(g).data(), outer_gram(f).data());
    const double oracle = testing::dense_residual_oracle(v.to_dense(), g, f);
    EXPECT_NEAR(residual_objective(DataMatrix{v}, gt, f, gf), oracle, 1e-10 * oracle);
    EXPECT_NEAR(residual_objective(DataMatrix{v.to_dense()}, gt, f, gf), oracle, 1e-10 * oracle);
  }
}

TEST(Objective, PartialDerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(60);
  const auto pl = planted(6, 5, 2, 61);
  NmfConfig cfg;
  cfg.rank = 2;
  cfg.mu1 = 0.3;
  cfg.mu2 = 0.2;
  cfg.beta1 = 0.1;
  cfg.beta2 = 0.4;
  NmfModel model{random_uniform(6, 2, rng, 0.5, 1.5), random_uniform(2, 5, rng, 0.5, 1.5)};
  const DataMatrix v{pl.V};
  const double delta = 1e-5;
  for (Index j = 0; j < 5; ++j) {
    const NqpProblem p = build_estep_problem(gram(model.G), v, j, model.G, cfg, model.F.col(j));
    const Vector grad = nqp_gradient(p.H, p.h, model.F.col(j));
    for (Index k = 0; k < 2; ++k) {
      NmfModel up = model;
      NmfModel dn = model;
      up.F(k, j) += delta;
      dn.F(k, j) -= delta;
      const double fd =
          (regularized_objective(v, up, cfg) - regularized_objective(v, dn, cfg)) / (2 * delta);
      EXPECT_NEAR(fd, grad[k], 1e-5 * std::max(1.0, std::abs(grad[k])));
    }
  }
  const DenseMatrix y = multiply(model.F, pl.V.transposed());
  for (Index i = 0; i < 6; ++i) {
    Vector gi{model.G(i, 0), model.G(i, 1)};
    const NqpProblem p = build_mstep_problem(outer_gram(model.F), y, i, cfg, gi);
    const Vector grad = nqp_gradient(p.H, p.h, gi);
    for (Index k = 0; k < 2; ++k) {
      NmfModel up = model;
      NmfModel dn = model;
      up.G(i, k) += delta;
      dn.G(i, k) -= delta;
      const double fd =
          (regularized_objective(v, up, cfg) - regularized_objective(v, dn, cfg)) / (2 * delta);
      EXPECT_NEAR(fd, grad[k], 1e-5 * std::max(1.0, std::abs(grad[k])));
    }
  }
}

TEST(Objective, DecompositionEquivalence) {
  std::mt19937_64 rng(62);
  for (int t = 0; t < 5; ++t) {
    const auto pl = planted(9, 7, 3, 63 + t);
    const DenseMatrix g = random_uniform(9, 3, rng);
    const DenseMatrix f = random_uniform(3, 7, rng);
    const DataMatrix v{pl.V};
    NmfConfig cfg;
    cfg.rank = 3;
    const DenseMatrix q = gram(g);
    double total = 0.5 * squared_norm(v);
    for (Index j = 0; j < 7; ++j) {
      const NqpProblem p = build_estep_problem(q, v, j, g, cfg, f.col(j));
      total += nqp_objective(p.H, p.h, f.col(j));
    }
    const double global = frobenius_objective(pl.V, g, f);
    EXPECT_NEAR(total, global, 1e-9 * global);
  }
}

TEST(Initialize, ScaledUniformAndSeeded) {
  const auto pl = planted(10, 12, 3, 64);
  NmfConfig cfg;
  cfg.rank = 3;
  cfg.seed = 9;
  const NmfModel a = initialize(DataMatrix{pl.V}, cfg);
  const NmfModel b = initialize(DataMatrix{pl.V}, cfg);
  EXPECT_EQ(a.G, b.G);
  EXPECT_EQ(a.F, b.F);
  const double bound = std::sqrt(mean_value(DataMatrix{pl.V}) / 3.0);
  for (double x : a.G.data()) {
    EXPECT_GE(x, 0.0);
    EXPECT_LE(x, bound);
  }
  cfg.seed = 10;
  EXPECT_NE(initialize(DataMatrix{pl.V}, cfg).G, a.G);
}

TEST(Fit, PlantedReachesSmallResidual) {
  const auto pl = planted(20, 30, 3, 65);
  NmfConfig cfg;
  cfg.rank = 3;
  cfg.max_outer = 200;
  cfg.rel_tol = 0.0;
  const FitResult res = fit(DataMatrix{pl.V}, cfg);
  ASSERT_FALSE(res.failure.has_value());
  ASSERT_FALSE(res.log.records.empty());
  const double half_norm = 0.5 * squared_norm(DataMatrix{pl.V});
  EXPECT_LE(res.log.records.back().objective, 1e-3 * half_norm);
  EXPECT_GE(res.model.G.min_coeff(), 0.0);
  EXPECT_GE(res.model.F.min_coeff(), 0.0);
}

TEST(Fit, RankOnePlanted) {
  const auto pl = planted(15, 12, 1, 66);
  NmfConfig cfg;
  cfg.rank = 1;
  cfg.max_outer = 50;
  cfg.rel_tol = 0.0;
  const FitResult res = fit(DataMatrix{pl.V}, cfg);
  const double half_norm = 0.5 * squared_norm(DataMatrix{pl.V});
  EXPECT_LE(res.log.records.back().objective, 1e-6 * half_norm);
}

TEST(Fit, ZeroDataGivesZeroObjective) {
  NmfConfig cfg;
  cfg.rank = 2;
  cfg.max_outer = 3;
  const FitResult res = fit(DataMatrix{DenseMatrix(5, 4)}, cfg);
  ASSERT_FALSE(res.log.records.empty());
  EXPECT_EQ(res.log.records.front().objective, 0.0);
  EXPECT_EQ(multiply(res.model.G, res.model.F), DenseMatrix(5, 4));
}

TEST(Fit, ObjectiveNonIncreasing) {
  const auto pl = planted(30, 25, 4, 67);
  for (double mu2 : {0.0, 1e-2}) {
    NmfConfig cfg;
    cfg.rank = 4;
    cfg.max_outer = 80;
    cfg.rel_tol = 0.0;
    cfg.mu2 = mu2;
    cfg.beta2 = mu2;
    cfg.mu1 = mu2;
    const FitResult res = fit(DataMatrix{pl.V}, cfg);
    double prev = res.log.initial_objective;
    for (const auto& rec : res.log.records) {
      EXPECT_LE(rec.objective, prev + 1e-9 * std::abs(prev)) << "iteration " << rec.iter;
      prev = rec.objective;
    }
  }
}

TEST(Fit, LoggedObjectiveMatchesDirectEvaluation) {
  const auto pl = planted(12, 9, 2, 68);
  NmfConfig cfg;
  cfg.rank = 2;
  cfg.max_outer = 5;
  cfg.rel_tol = 0.0;
  cfg.mu1 = 0.1;
  cfg.beta2 = 0.2;
  const FitResult res = fit(DataMatrix{pl.V}, cfg);
  const double direct = regularized_objective(DataMatrix{pl.V}, res.model, cfg);
  EXPECT_NEAR(res.log.records.back().objective, direct, 1e-10 * direct);
  for (const auto& rec : res.log.records) {
    EXPECT_DOUBLE_EQ(rec.k_bar, static_cast<double>(rec.inner_iterations) / 21.0);
  }
}

TEST(Fit, KktAtTightTolerance) {
  const auto pl = planted(10, 8, 2, 69);
  NmfConfig cfg;
  cfg.rank = 2;
  cfg.max_outer = 2000;
  cfg.rel_tol = 0.0;
  cfg.epsilon = 1e-16;
  cfg.inner_cap = 200;
  const FitResult res = fit(DataMatrix{pl.V}, cfg);
  const DenseMatrix& g = res.model.G;
  const DenseMatrix& f = res.model.F;
  const DenseMatrix gf = multiply(g, f);
  DenseMatrix resid(10, 8);
  for (Index i = 0; i < resid.size(); ++i) resid.data()[i] = gf.data()[i] - pl.V.data()[i];
  const DenseMatrix grad_f = multiply(g.transposed(), resid);
  const DenseMatrix grad_g = multiply(resid, f.transposed());
  for (Index i = 0; i < f.size(); ++i) {
    EXPECT_LE(std::min(f.data()[i], std::max(grad_f.data()[i], 0.0)), 1e-6);
  }
  for (Index i = 0; i < g.size(); ++i) {
    EXPECT_LE(std::min(g.data()[i], std::max(grad_g.data()[i], 0.0)), 1e-6);
  }
}

TEST(Fit, SparseAndDenseLogsAgree) {
  std::mt19937_64 rng(70);
  const SparseMatrix v = testing::random_sparse(40, 30, 0.15, rng);
  NmfConfig cfg;
  cfg.rank = 4;
  cfg.max_outer = 30;
  cfg.rel_tol = 0.0;
  const FitResult a = fit(DataMatrix{v}, cfg);
  const FitResult b = fit(DataMatrix{v.to_dense()}, cfg);
  ASSERT_EQ(a.log.records.size(), b.log.records.size());
  for (Index k = 0; k < a.log.records.size(); ++k) {
    const double x = a.log.records[k].objective;
    const double y = b.log.records[k].objective;
    EXPECT_NEAR(x, y, 1e-9 * std::abs(y));
  }
}

TEST(Fit, MismatchedInitThrows) {
  const auto pl = planted(5, 4, 2, 71);
  NmfConfig cfg;
  cfg.rank = 2;
  EXPECT_THROW(fit(DataMatrix{pl.V}, cfg, NmfModel{DenseMatrix(5, 3), DenseMatrix(3, 4)}),
               SizeError);
}

TEST(Fit, EarlyExitOnRelativeChange) {
  const auto pl = planted(10, 10, 2, 72);
  NmfConfig cfg;
  cfg.rank = 2;
  cfg.max_outer = 1000;
  cfg.rel_tol = 1e-4;
  const FitResult res = fit(DataMatrix{pl.V}, cfg);
  EXPECT_LT(res.log.records.size(), 1000u);
}

}  // namespace
}  // namespace alo
