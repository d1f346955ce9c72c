#include "alo/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "alo/errors.hpp"

namespace alo {

namespace {

constexpr double kTau = 1e-12;

// Same residual evaluation as fit() so logs from both drivers compare exactly.
double logged_objective(const DataMatrix& v, const NmfModel& model, const NmfConfig& cfg) {
  const DenseMatrix gt = model.G.transposed();
  const DenseMatrix q_g = gram(model.G);
  const DenseMatrix h_f = outer_gram(model.F);
  const double gf = dot(q_g.data(), h_f.data());
  return residual_objective(v, gt, model.F, gf) + penalty(model.G, model.F, cfg);
}

}  // namespace

std::string_view to_string(BaselineKind kind) noexcept {
  switch (kind) {
    case BaselineKind::kMur:
      return "mur";
    case BaselineKind::kPlainExactLineSearch:
      return "plain-els";
  }
  return "unknown";
}

void mur_step(const DataMatrix& v, DenseMatrix& g, DenseMatrix& f, const NmfConfig& cfg) {
  const Index n = rows_of(v);
  const Index m = cols_of(v);
  const Index r = g.cols();
  if (g.rows() != n || f.rows() != r || f.cols() != m) {
    throw SizeError("MUR factor dimensions do not match V");
  }

  // F update.
  const DenseMatrix gt = g.transposed();
  const DenseMatrix q = gram(g);
  Vector num(r);
  Vector den(r);
  for (Index j = 0; j < m; ++j) {
    project_column(v, j, gt, num);
    auto fj = f.col(j);
    for (Index k = 0; k < r; ++k) den[k] = dot(q.col(k), fj);
    for (Index k = 0; k < r; ++k) {
      fj[k] *= num[k] / (den[k] + cfg.mu1 + 2.0 * cfg.mu2 * fj[k] + kTau);
    }
  }

  // G update with the new F: VFᵀ is accumulated as Y = FVᵀ (r x n).
  DenseMatrix y(r, n);
  for (Index j = 0; j < m; ++j) {
    const auto fj = f.col(j);
    for_each_nonzero(v, j, [&](Index i, double x) {
      auto yi = y.col(i);
      for (Index k = 0; k < r; ++k) yi[k] += fj[k] * x;
    });
  }
  const DenseMatrix h_f = outer_gram(f);
  Vector gi(r);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < r; ++k) gi[k] = g(i, k);
    for (Index k = 0; k < r; ++k) {
      const double d = dot(h_f.col(k), gi);
      g(i, k) = gi[k] * y(k, i) / (d + cfg.beta1 + 2.0 * cfg.beta2 * gi[k] + kTau);
    }
  }
}

FitResult fit_mur(const DataMatrix& v, const NmfConfig& cfg, NmfModel init) {
  cfg.validate();
  const Index n = rows_of(v);
  const Index m = cols_of(v);
  if (init.G.rows() != n || init.G.cols() != cfg.rank || init.F.rows() != cfg.rank ||
      init.F.cols() != m) {
    throw SizeError("initial factors do not match V and rank");
  }
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  FitResult result;
  result.model = std::move(init);
  result.log.initial_objective = logged_objective(v, result.model, cfg);
  double previous = result.log.initial_objective;
  for (Index it = 1; it <= cfg.max_outer; ++it) {
    mur_step(v, result.model.G, result.model.F, cfg);
    const double objective = logged_objective(v, result.model, cfg);
    IterationRecord rec;
    rec.iter = it;
    rec.objective = objective;
    rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    rec.inner_iterations = m + n;
    rec.k_bar = 1.0;
    result.log.records.push_back(rec);
    if (cfg.rel_tol > 0.0 && previous - objective <= cfg.rel_tol * std::abs(previous)) break;
    previous = objective;
  }
  return result;
}

NqpSolution plain_els_solve(const NqpProblem& p, std::span<const double> x0, double tol,
                            Index max_iter) {
  const Index r = p.dim();
  if (p.H.rows() != r || p.H.cols() != r || x0.size() != r) {
    throw SizeError("plain line search dimensions do not match");
  }
  NqpSolution sol;
  sol.x.assign(x0.begin(), x0.end());
  sol.grad = nqp_gradient(p.H, p.h, sol.x);
  LineSearchWorkspace ws;
  double norm = passive_grad_norm_sq(sol.x, sol.grad);
  sol.initial_passive_grad_norm_sq = norm;
  const double target = std::max(tol * norm, gradient_noise_floor(p.h));
  Index k = 0;
  while (norm > target && k < max_iter) {
    exact_line_search_step(p.H, sol.x, sol.grad, ws);
    ++k;
    norm = passive_grad_norm_sq(sol.x, sol.grad);
    if (!std::isfinite(norm)) {
      throw NumericalFailure("non-finite iterate in plain line search", sol.x);
    }
  }
  sol.inner_iterations = k;
  sol.final_passive_grad_norm_sq = norm;
  return sol;
}

}  // namespace alo
