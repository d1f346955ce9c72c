#include "alo/nmf.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "alo/parallel.hpp"

namespace alo {

void NmfConfig::validate() const {
  if (rank < 1) throw std::invalid_argument("rank must be at least 1");
  if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must be in (0, 1]");
  for (double w : {mu1, mu2, beta1, beta2}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("regularization weights must be finite and non-negative");
    }
  }
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (inner_cap < 1) throw std::invalid_argument("inner_cap must be at least 1");
  if (stop_block < 1) throw std::invalid_argument("stop_block must be at least 1");
  if (reduce_chunks < 1) throw std::invalid_argument("reduce_chunks must be at least 1");
  if (!(rel_tol >= 0.0)) throw std::invalid_argument("rel_tol must be non-negative");
}

DenseMatrix estep_hessian(const DenseMatrix& q_g, const NmfConfig& cfg) {
  DenseMatrix h = q_g;
  for (Index k = 0; k < h.rows(); ++k) h(k, k) += 2.0 * cfg.mu2;
  return h;
}

DenseMatrix mstep_hessian(const DenseMatrix& h_f, const NmfConfig& cfg) {
  DenseMatrix h = h_f;
  for (Index k = 0; k < h.rows(); ++k) h(k, k) += 2.0 * cfg.beta2;
  return h;
}

NqpProblem build_estep_problem(const DenseMatrix& q_g, const DataMatrix& v, Index col,
                               const DenseMatrix& g, const NmfConfig& cfg,
                               std::span<const double> warm) {
  const Index r = g.cols();
  if (q_g.rows() != r || q_g.cols() != r || warm.size() != r || g.rows() != rows_of(v)) {
    throw SizeError("E-step problem dimensions do not match");
  }
  NqpProblem p{estep_hessian(q_g, cfg), Vector(r), Vector(warm.begin(), warm.end())};
  project_column(v, col, g.transposed(), p.h);
  for (double& x : p.h) x = cfg.mu1 - x;
  return p;
}

NqpProblem build_mstep_problem(const DenseMatrix& h_f, const DenseMatrix& y, Index row,
                               const NmfConfig& cfg, std::span<const double> warm) {
  const Index r = h_f.rows();
  if (h_f.cols() != r || y.rows() != r || warm.size() != r) {
    throw SizeError("M-step problem dimensions do not match");
  }
  if (row >= y.cols()) throw BoundsError("row " + std::to_string(row) + " out of range");
  NqpProblem p{mstep_hessian(h_f, cfg), Vector(r), Vector(warm.begin(), warm.end())};
  const auto yj = y.col(row);
  for (Index k = 0; k < r; ++k) p.h[k] = cfg.beta1 - yj[k];
  return p;
}

NmfModel initialize(const DataMatrix& v, const NmfConfig& cfg) {
  const Index n = rows_of(v);
  const Index m = cols_of(v);
  const Index r = cfg.rank;
  const double scale = std::sqrt(mean_value(v) / static_cast<double>(r));
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NmfModel model{DenseMatrix(n, r), DenseMatrix(r, m)};
  for (double& x : model.G.data()) x = unit(rng) * scale;
  for (double& x : model.F.data()) x = unit(rng) * scale;
  return model;
}

double penalty(const DenseMatrix& g, const DenseMatrix& f, const NmfConfig& cfg) noexcept {
  double s = 0.0;
  if (cfg.mu1 != 0.0 || cfg.mu2 != 0.0) {
    double l1 = 0.0;
    for (double x : f.data()) l1 += std::abs(x);
    s += cfg.mu1 * l1 + cfg.mu2 * squared_norm(f.data());
  }
  if (cfg.beta1 != 0.0 || cfg.beta2 != 0.0) {
    double l1 = 0.0;
    for (double x : g.data()) l1 += std::abs(x);
    s += cfg.beta1 * l1 + cfg.beta2 * squared_norm(g.data());
  }
  return s;
}

double regularized_objective(const DataMatrix& v, const NmfModel& model, const NmfConfig& cfg) {
  return frobenius_objective(v, model.G, model.F) + penalty(model.G, model.F, cfg);
}

double residual_objective(const DataMatrix& v, const DenseMatrix& gt, const DenseMatrix& f,
                          double gf_norm_sq) {
  const Index n = rows_of(v);
  const Index m = cols_of(v);
  double stored_residual = 0.0;
  double stored_model = 0.0;
  Index stored = 0;
  for (Index j = 0; j < m; ++j) {
    const auto fj = f.col(j);
    for_each_nonzero(v, j, [&](Index i, double x) {
      const double gf = dot(gt.col(i), fj);
      stored_residual += (x - gf) * (x - gf);
      stored_model += gf * gf;
      ++stored;
    });
  }
  double implicit = 0.0;
  if (stored < n * m) implicit = std::max(0.0, gf_norm_sq - stored_model);
  return 0.5 * (stored_residual + implicit);
}

FitResult fit(const DataMatrix& v, const NmfConfig& cfg) {
  cfg.validate();
  return fit(v, cfg, initialize(v, cfg));
}

FitResult fit(const DataMatrix& v, const NmfConfig& cfg, NmfModel init) {
  cfg.validate();
  const Index n = rows_of(v);
  const Index m = cols_of(v);
  const Index r = cfg.rank;
  if (init.G.rows() != n || init.G.cols() != r || init.F.rows() != r || init.F.cols() != m) {
    throw SizeError("initial factors do not match V and rank");
  }

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  FitResult result;
  DenseMatrix gt = init.G.transposed();
  DenseMatrix f = std::move(init.F);
  DenseMatrix q_g = outer_gram(gt);
  {
    const DenseMatrix h_f = outer_gram(f);
    double gf = 0.0;
    for (Index k = 0; k < q_g.size(); ++k) gf += q_g.data()[k] * h_f.data()[k];
    result.log.initial_objective = residual_objective(v, gt, f, gf) + penalty(gt, f, cfg);
  }

  double previous = result.log.initial_objective;
  for (Index it = 1; it <= cfg.max_outer; ++it) {
    DenseMatrix f_next = f;
    DenseMatrix gt_next = gt;
    ReduceResult e;
    MStepPart mpart;
    try {
      e = run_estep(v, gt, q_g, cfg, f_next);
      mpart = run_mstep(e.h_f, e.y, cfg, gt_next);
    } catch (const NumericalFailure& failure) {
      result.failure = failure;
      break;
    }
    f = std::move(f_next);
    gt = std::move(gt_next);
    q_g = outer_gram(gt);

    double gf = 0.0;
    for (Index k = 0; k < q_g.size(); ++k) gf += q_g.data()[k] * e.h_f.data()[k];
    const double objective = residual_objective(v, gt, f, gf) + penalty(gt, f, cfg);

    IterationRecord rec;
    rec.iter = it;
    rec.objective = objective;
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rec.inner_iterations = e.inner_iterations + mpart.inner_iterations;
    rec.k_bar = static_cast<double>(rec.inner_iterations) / static_cast<double>(m + n);
    result.log.records.push_back(rec);
    result.worker_high_water_reals = std::max(
        {result.worker_high_water_reals, e.high_water_reals, mpart.high_water_reals});

    if (cfg.rel_tol > 0.0 && previous - objective <= cfg.rel_tol * std::abs(previous)) break;
    previous = objective;
  }

  result.model.G = gt.transposed();
  result.model.F = std::move(f);
  return result;
}

}  // namespace alo
