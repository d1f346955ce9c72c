#include "alo/nqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "alo/errors.hpp"

namespace alo {

namespace {

constexpr double kFreezeRelative = 1e-12;

double freeze_threshold(const DenseMatrix& H) {
  double max_diag = 0.0;
  for (Index i = 0; i < H.rows(); ++i) max_diag = std::max(max_diag, H(i, i));
  return kFreezeRelative * max_diag;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// f(y) = ½yᵀQy + qᵀy = ½yᵀ(grad + q) when grad = Qy + q.
double objective_from_gradient(std::span<const double> y, std::span<const double> grad,
                               std::span<const double> q) {
  double s = 0.0;
  for (Index i = 0; i < y.size(); ++i) s += y[i] * (grad[i] + q[i]);
  return 0.5 * s;
}

}  // namespace

double gradient_noise_floor(std::span<const double> q) noexcept {
  constexpr double kNoise = 16.0 * std::numeric_limits<double>::epsilon();
  return kNoise * kNoise * squared_norm(q);
}

void NqpProblem::validate() const {
  const Index r = h.size();
  if (H.rows() != r || H.cols() != r) throw SizeError("H must be r x r with r = len(h)");
  if (x0.size() != r) throw SizeError("x0 must have length r");
  for (Index j = 0; j < r; ++j) {
    if (H(j, j) < 0.0) throw DomainError("diag(H) must be non-negative");
    for (Index i = 0; i < j; ++i) {
      const double tol = 1e-12 * std::max({1.0, std::abs(H(i, j)), std::abs(H(j, i))});
      if (std::abs(H(i, j) - H(j, i)) > tol) throw DomainError("H must be symmetric");
    }
  }
  for (double x : x0) {
    if (!(x >= 0.0)) throw DomainError("x0 must be non-negative");
  }
}

void LineSearchWorkspace::resize(Index n) {
  direction.assign(n, 0.0);
  q_direction.assign(n, 0.0);
  delta.assign(n, 0.0);
  q_delta.assign(n, 0.0);
}

double nqp_objective(const DenseMatrix& H, std::span<const double> h, std::span<const double> x) {
  double s = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    s += x[j] * (0.5 * dot(H.col(j), x) + h[j]);
  }
  return s;
}

Vector nqp_gradient(const DenseMatrix& H, std::span<const double> h, std::span<const double> x) {
  Vector g(h.begin(), h.end());
  for (Index j = 0; j < x.size(); ++j) {
    if (x[j] == 0.0) continue;
    const auto c = H.col(j);
    for (Index i = 0; i < g.size(); ++i) g[i] += c[i] * x[j];
  }
  return g;
}

RescaledProblem rescale(const NqpProblem& p) {
  const Index r = p.dim();
  if (p.H.rows() != r || p.H.cols() != r) throw SizeError("H must be r x r");
  const double delta = freeze_threshold(p.H);
  RescaledProblem out{DenseMatrix(r, r), Vector(r, 0.0), Vector(r, 0.0),
                      std::vector<bool>(r, false)};
  bool any_active = false;
  for (Index i = 0; i < r; ++i) {
    out.scale[i] = std::sqrt(std::max(p.H(i, i), 0.0));
    out.active_dims[i] = p.H(i, i) > delta;
    any_active = any_active || out.active_dims[i];
  }
  if (!any_active) {
    throw DegenerateProblem("every diagonal entry of H is zero; the objective is linear");
  }
  for (Index j = 0; j < r; ++j) {
    if (!out.active_dims[j]) continue;
    for (Index i = 0; i < r; ++i) {
      if (!out.active_dims[i]) continue;
      out.Q(i, j) = i == j ? 1.0 : p.H(i, j) / (out.scale[i] * out.scale[j]);
    }
    out.q[j] = p.h[j] / out.scale[j];
  }
  return out;
}

std::vector<bool> passive_mask(std::span<const double> x, std::span<const double> grad) {
  if (x.size() != grad.size()) throw SizeError("x and grad lengths differ");
  std::vector<bool> mask(x.size());
  for (Index i = 0; i < x.size(); ++i) mask[i] = x[i] > 0.0 || grad[i] < 0.0;
  return mask;
}

double passive_grad_norm_sq(std::span<const double> x, std::span<const double> grad) noexcept {
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 || grad[i] < 0.0) s += grad[i] * grad[i];
  }
  return s;
}

LineSearchStep exact_line_search_step(const DenseMatrix& Q, std::span<double> x,
                                      std::span<double> grad, LineSearchWorkspace& ws) {
  const Index n = x.size();
  if (ws.direction.size() != n) ws.resize(n);
  auto& dir = ws.direction;
  auto& qdir = ws.q_direction;
  auto& delta = ws.delta;
  auto& qdelta = ws.q_delta;

  double gg = 0.0;
  for (Index i = 0; i < n; ++i) {
    dir[i] = (x[i] > 0.0 || grad[i] < 0.0) ? grad[i] : 0.0;
    gg += dir[i] * dir[i];
  }
  LineSearchStep step;
  if (gg == 0.0) return step;

  std::fill(qdir.begin(), qdir.end(), 0.0);
  for (Index j = 0; j < n; ++j) {
    if (dir[j] == 0.0) continue;
    const auto c = Q.col(j);
    for (Index i = 0; i < n; ++i) qdir[i] += c[i] * dir[j];
  }
  const double curvature = dot(dir, qdir);
  step.alpha = curvature > 0.0 ? gg / curvature : 1.0;

  // Unclipped coordinates move by exactly −α·dir, whose image Q(−α·dir) is
  // already known; only clipped coordinates need an extra column of Q.
  auto apply_delta = [&] {
    for (Index i = 0; i < n; ++i) qdelta[i] = -step.alpha * qdir[i];
    for (Index j = 0; j < n; ++j) {
      if (dir[j] == 0.0) {
        delta[j] = 0.0;
        continue;
      }
      const double moved = -step.alpha * dir[j];
      if (x[j] + moved >= 0.0) {
        delta[j] = moved;
        continue;
      }
      delta[j] = -x[j];
      const double extra = delta[j] - moved;
      const auto c = Q.col(j);
      for (Index i = 0; i < n; ++i) qdelta[i] += c[i] * extra;
    }
    // f(x + d) − f(x) = gᵀd + ½dᵀQd
    return dot(grad, delta) + 0.5 * dot(delta, qdelta);
  };

  if (apply_delta() > 0.0) {
    double to_bound = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i) {
      if (dir[i] > 0.0) to_bound = std::min(to_bound, x[i] / dir[i]);
    }
    step.alpha = std::min(step.alpha, to_bound);
    step.truncated = true;
    if (apply_delta() > 0.0) {
      // Only reachable through rounding at the optimum; stay put.
      step.alpha = 0.0;
      return step;
    }
  }

  for (Index i = 0; i < n; ++i) {
    if (delta[i] == 0.0) continue;
    x[i] = std::max(0.0, x[i] + delta[i]);
    step.moved = true;
  }
  for (Index i = 0; i < n; ++i) grad[i] += qdelta[i];
  return step;
}

LineSearchStep exact_line_search_step(const DenseMatrix& Q, std::span<double> x,
                                      std::span<double> grad) {
  LineSearchWorkspace ws;
  return exact_line_search_step(Q, x, grad, ws);
}

Index greedy_cd_pass(const DenseMatrix& Q, std::span<double> x, std::span<double> grad,
                     Index sweeps, std::vector<double>* step_objective, double f0) {
  const Index n = x.size();
  bool unit_diagonal = true;
  for (Index i = 0; i < n; ++i) unit_diagonal = unit_diagonal && Q(i, i) == 1.0;
  double f = f0;
  Index changed = 0;
  for (Index t = 0; t < sweeps; ++t) {
    Index best = n;
    double best_decrease = 0.0;
    double best_target = 0.0;
    if (unit_diagonal) {
      for (Index i = 0; i < n; ++i) {
        const double target = x[i] - grad[i] > 0.0 ? x[i] - grad[i] : 0.0;
        const double d = target - x[i];
        const double decrease = std::abs(d * (grad[i] + 0.5 * d));
        const bool better = decrease > best_decrease;
        best = better ? i : best;
        best_decrease = better ? decrease : best_decrease;
      }
      if (best < n) best_target = std::max(0.0, x[best] - grad[best]);
    } else {
      for (Index i = 0; i < n; ++i) {
        const double qii = Q(i, i);
        if (!(qii > 0.0)) continue;
        const double target = std::max(0.0, x[i] - grad[i] / qii);
        const double d = target - x[i];
        const double decrease = std::abs(grad[i] * d + 0.5 * qii * d * d);
        if (decrease > best_decrease) {
          best = i;
          best_decrease = decrease;
          best_target = target;
        }
      }
    }
    if (best == n) break;
    const double d = best_target - x[best];
    if (d == 0.0) break;
    const auto c = Q.col(best);
    for (Index i = 0; i < n; ++i) grad[i] += c[i] * d;
    x[best] = best_target;
    ++changed;
    if (step_objective != nullptr) {
      f -= best_decrease;
      step_objective->push_back(f);
    }
  }
  return changed;
}

NqpSolver::NqpSolver(const DenseMatrix& H) : dim_(H.rows()) {
  if (H.rows() != H.cols()) throw SizeError("H must be square");
  const double delta = freeze_threshold(H);
  for (Index i = 0; i < dim_; ++i) {
    (H(i, i) > delta ? active_ : frozen_).push_back(i);
  }
  const Index ra = active_.size();
  scale_.resize(ra);
  for (Index a = 0; a < ra; ++a) scale_[a] = std::sqrt(H(active_[a], active_[a]));
  Q_ = DenseMatrix(ra, ra);
  for (Index b = 0; b < ra; ++b) {
    for (Index a = 0; a < ra; ++a) {
      Q_(a, b) = a == b ? 1.0 : H(active_[a], active_[b]) / (scale_[a] * scale_[b]);
    }
  }
  if (!frozen_.empty()) H_ = H;
  q_.resize(ra);
  y_.resize(ra);
  grad_.resize(ra);
  last_finite_.resize(ra);
  ws_.resize(ra);
}

Index NqpSolver::buffer_reals() const noexcept {
  return H_.size() + Q_.size() + scale_.size() + q_.size() + y_.size() + grad_.size() +
         last_finite_.size() + ws_.direction.size() + ws_.q_direction.size() +
         ws_.delta.size() + ws_.q_delta.size();
}

NqpSolution NqpSolver::solve(std::span<const double> h, std::span<const double> x0,
                             StopState& stop, Index max_inner, SolveTrace* trace) {
  if (h.size() != dim_ || x0.size() != dim_) throw SizeError("h and x0 must have length r");
  if (max_inner < 1) throw SizeError("max_inner must be at least 1");
  if (!all_finite(h) || !all_finite(x0)) {
    throw NumericalFailure("non-finite input to NQP solve", Vector(x0.begin(), x0.end()));
  }
  for (Index i : frozen_) {
    if (h[i] < 0.0) {
      throw NumericalFailure("objective unbounded along zero-curvature dim " + std::to_string(i),
                             Vector(x0.begin(), x0.end()));
    }
  }

  const Index ra = active_.size();
  for (Index a = 0; a < ra; ++a) {
    q_[a] = h[active_[a]] / scale_[a];
    y_[a] = std::max(0.0, x0[active_[a]]) * scale_[a];
  }
  for (Index a = 0; a < ra; ++a) grad_[a] = q_[a];
  for (Index b = 0; b < ra; ++b) {
    if (y_[b] == 0.0) continue;
    const auto c = Q_.col(b);
    for (Index a = 0; a < ra; ++a) grad_[a] += c[a] * y_[b];
  }

  NqpSolution sol;
  double norm = passive_grad_norm_sq(y_, grad_);
  sol.initial_passive_grad_norm_sq = norm;
  if (trace != nullptr) {
    trace->outer_objective.push_back(objective_from_gradient(y_, grad_, q_));
    trace->passive_grad_norm_sq.push_back(norm);
  }

  const double floor = gradient_noise_floor(q_);
  if (norm > floor) {
    const double target = std::max(stop.epsilon * sol.initial_passive_grad_norm_sq, floor);
    Index k = 0;
    do {
      std::copy(y_.begin(), y_.end(), last_finite_.begin());
      exact_line_search_step(Q_, y_, grad_, ws_);
      if (trace != nullptr) {
        trace->step_objective.push_back(objective_from_gradient(y_, grad_, q_));
        greedy_cd_pass(Q_, y_, grad_, ra, &trace->step_objective,
                       trace->step_objective.back());
      } else {
        greedy_cd_pass(Q_, y_, grad_, ra);
      }
      ++k;
      norm = passive_grad_norm_sq(y_, grad_);
      if (!std::isfinite(norm) || !all_finite(y_)) {
        Vector last(dim_, 0.0);
        for (Index a = 0; a < ra; ++a) last[active_[a]] = last_finite_[a] / scale_[a];
        throw NumericalFailure("non-finite iterate in NQP solve", std::move(last));
      }
      if (trace != nullptr) {
        trace->outer_objective.push_back(objective_from_gradient(y_, grad_, q_));
        trace->passive_grad_norm_sq.push_back(norm);
        if (trace->check_gradient) {
          Vector exact(q_);
          for (Index b = 0; b < ra; ++b) {
            const auto c = Q_.col(b);
            for (Index a = 0; a < ra; ++a) exact[a] += c[a] * y_[b];
          }
          const double scale = std::max(1.0, std::sqrt(squared_norm(exact)));
          for (Index a = 0; a < ra; ++a) {
            trace->max_gradient_drift =
                std::max(trace->max_gradient_drift, std::abs(exact[a] - grad_[a]) / scale);
          }
        }
      }
    } while (!(norm <= target || norm <= stop.max_stop) && k < max_inner);
    sol.inner_iterations = k;
    stop.max_stop = std::max(stop.max_stop, norm);
  }
  sol.final_passive_grad_norm_sq = norm;

  sol.x.assign(dim_, 0.0);
  sol.grad.assign(dim_, 0.0);
  for (Index a = 0; a < ra; ++a) {
    sol.x[active_[a]] = y_[a] / scale_[a];
    sol.grad[active_[a]] = grad_[a] * scale_[a];
  }
  for (Index i : frozen_) {
    double g = h[i];
    for (Index a = 0; a < ra; ++a) g += H_(i, active_[a]) * sol.x[active_[a]];
    sol.grad[i] = g;
  }
  return sol;
}

NqpSolution solve(const NqpProblem& p, StopState& stop, Index max_inner, SolveTrace* trace) {
  p.validate();
  NqpSolver solver(p.H);
  return solver.solve(p.h, p.x0, stop, max_inner, trace);
}

}  // namespace alo
