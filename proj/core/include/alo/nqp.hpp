#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "alo/matrix.hpp"

namespace alo {

/// min ½xᵀHx + hᵀx  s.t. x ≥ 0, started from x0.
struct NqpProblem {
  DenseMatrix H;
  Vector h;
  Vector x0;

  Index dim() const noexcept { return h.size(); }

  // Throws SizeError / DomainError when H is not square and symmetric
  // (1e-12 relative), diag(H) has a negative entry, or x0 has one.
  void validate() const;
};

/// Unit-diagonal form of a problem, y = x ∘ scale.
/// Inactive dims (Hᵢᵢ at or below the freeze threshold) have zero rows and
/// columns in Q, zero in q, and are held at zero by the solver.
struct RescaledProblem {
  DenseMatrix Q;
  Vector q;
  Vector scale;
  std::vector<bool> active_dims;
};

/// Per-worker early-exit threshold shared by consecutive solves.
struct StopState {
  double max_stop = 0.0;
  double epsilon = 0.1;

  void reset() noexcept { max_stop = 0.0; }
};

struct NqpSolution {
  Vector x;     // original scale, elementwise ≥ 0
  Vector grad;  // Hx + h at x
  Index inner_iterations = 0;
  // Squared norms of the passive-set gradient in the rescaled variables.
  double initial_passive_grad_norm_sq = 0.0;
  double final_passive_grad_norm_sq = 0.0;
};

/// Optional instrumentation for solve(). Objectives are in the rescaled
/// variables, where they coincide with f(x).
struct SolveTrace {
  bool check_gradient = false;
  std::vector<double> outer_objective;         // f at start and after each outer iteration
  std::vector<double> step_objective;          // f after every line-search step and coordinate update
  std::vector<double> passive_grad_norm_sq;    // at start and after each outer iteration
  double max_gradient_drift = 0.0;             // max relative |grad − (Qy + q)|, if check_gradient
};

struct LineSearchStep {
  double alpha = 0.0;
  bool moved = false;
  // True when the projected exact step would have increased f and the step
  // was shortened to the first bound along the search direction.
  bool truncated = false;
};

// Scratch buffers for the line-search kernel, reused across calls.
struct LineSearchWorkspace {
  Vector direction;
  Vector q_direction;
  Vector delta;
  Vector q_delta;

  void resize(Index n);
};

double nqp_objective(const DenseMatrix& H, std::span<const double> h, std::span<const double> x);
Vector nqp_gradient(const DenseMatrix& H, std::span<const double> h, std::span<const double> x);

RescaledProblem rescale(const NqpProblem& p);

// mask[i] = x[i] > 0 || grad[i] < 0
std::vector<bool> passive_mask(std::span<const double> x, std::span<const double> grad);

double passive_grad_norm_sq(std::span<const double> x, std::span<const double> grad) noexcept;

// Squared passive-gradient norm indistinguishable from rounding noise for a
// linear term q: (16·machine epsilon)²·‖q‖². Solves stop at or below it.
double gradient_noise_floor(std::span<const double> q) noexcept;

/// One projected exact line-search step along the passive-set gradient.
/// Updates x and grad (grad must equal Qx + q on entry) in place.
LineSearchStep exact_line_search_step(const DenseMatrix& Q, std::span<double> x,
                                      std::span<double> grad, LineSearchWorkspace& ws);
LineSearchStep exact_line_search_step(const DenseMatrix& Q, std::span<double> x,
                                      std::span<double> grad);

/// `sweeps` greedy single-coordinate minimizations. Returns the number of
/// coordinates actually changed; stops early once no coordinate can move.
/// When step_objective is non-null, f is tracked incrementally from f0.
Index greedy_cd_pass(const DenseMatrix& Q, std::span<double> x, std::span<double> grad,
                     Index sweeps, std::vector<double>* step_objective = nullptr,
                     double f0 = 0.0);

/// Solver bound to one quadratic term. Rescaling is done once in the
/// constructor; solve() can then be called for many linear terms, which is
/// how the NMF driver uses it (one Hessian per E-step or M-step).
class NqpSolver {
 public:
  explicit NqpSolver(const DenseMatrix& H);

  Index dim() const noexcept { return dim_; }

  NqpSolution solve(std::span<const double> h, std::span<const double> x0, StopState& stop,
                    Index max_inner, SolveTrace* trace = nullptr);

  // Doubles currently owned by this solver's buffers.
  Index buffer_reals() const noexcept;

 private:
  Index dim_ = 0;
  DenseMatrix H_;                // original quadratic term, for frozen-dim gradients
  std::vector<Index> active_;    // active dim -> original dim
  std::vector<Index> frozen_;
  DenseMatrix Q_;                // compact, active x active
  Vector scale_;                 // compact
  Vector q_, y_, grad_, last_finite_;
  LineSearchWorkspace ws_;
};

NqpSolution solve(const NqpProblem& p, StopState& stop, Index max_inner = 500,
                  SolveTrace* trace = nullptr);

}  // namespace alo
