#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "alo/errors.hpp"
#include "alo/matrix.hpp"
#include "alo/nqp.hpp"

namespace alo {

struct NmfConfig {
  Index rank = 10;
  Index max_outer = 300;
  double epsilon = 0.1;  // accelerated condition for every inner NQP solve
  double mu1 = 0.0;      // L1 weight on F
  double mu2 = 0.0;      // L2 weight on F
  double beta1 = 0.0;    // L1 weight on G
  double beta2 = 0.0;    // L2 weight on G
  Index workers = 1;
  std::uint64_t seed = 0;
  Index inner_cap = 500;
  // Early exit once (f_prev − f) ≤ rel_tol·|f_prev|. Zero disables it and
  // runs exactly max_outer alternations.
  double rel_tol = 1e-10;
  // The fast-break threshold is reset every stop_block columns (rows), at
  // fixed global indices, so results do not depend on the worker count.
  Index stop_block = 64;
  // E-step partial sums are folded in this many fixed column chunks, in
  // ascending order, so the reduced FVᵀ and FFᵀ are bitwise independent of
  // the worker count. Also bounds the useful E-step parallelism.
  Index reduce_chunks = 16;
  // The M-step is sharded across workers only when n·r² exceeds this.
  double mstep_parallel_flops = 1e7;

  void validate() const;  // throws std::invalid_argument
};

/// V ≈ GF with G (n x r) latent components and F (r x m) coefficients.
struct NmfModel {
  DenseMatrix G;
  DenseMatrix F;
};

struct IterationRecord {
  Index iter = 0;
  double objective = 0.0;
  double seconds = 0.0;  // cumulative wall time
  Index inner_iterations = 0;
  double k_bar = 0.0;    // inner_iterations / (m + n)
};

struct ConvergenceLog {
  double initial_objective = 0.0;
  std::vector<IterationRecord> records;
};

struct FitResult {
  NmfModel model;
  ConvergenceLog log;
  // Set when a subproblem failed; model and log hold the last completed
  // alternation.
  std::optional<NumericalFailure> failure;
  // Largest per-worker buffer footprint observed, in doubles.
  Index worker_high_water_reals = 0;
};

/// H = GᵀG + 2μ₂I, h = −GᵀV_col + μ₁1, x0 = warm.
NqpProblem build_estep_problem(const DenseMatrix& q_g, const DataMatrix& v, Index col,
                               const DenseMatrix& g, const NmfConfig& cfg,
                               std::span<const double> warm);

/// H = FFᵀ + 2β₂I, h = −Y_row + β₁1, x0 = warm, with Y = FVᵀ stored r x n so
/// that "row" j of the M-step is column j of y.
NqpProblem build_mstep_problem(const DenseMatrix& h_f, const DenseMatrix& y, Index row,
                               const NmfConfig& cfg, std::span<const double> warm);

// Quadratic terms with the L2 penalty folded into the diagonal.
DenseMatrix estep_hessian(const DenseMatrix& q_g, const NmfConfig& cfg);
DenseMatrix mstep_hessian(const DenseMatrix& h_f, const NmfConfig& cfg);

/// i.i.d. uniform(0,1)·√(mean(V)/r) factors drawn from cfg.seed.
NmfModel initialize(const DataMatrix& v, const NmfConfig& cfg);

/// ½‖V − GF‖² + μ₁ΣF + β₁ΣG + μ₂‖F‖² + β₂‖G‖².
double regularized_objective(const DataMatrix& v, const NmfModel& model, const NmfConfig& cfg);

// The penalty part of regularized_objective. G may be passed in either
// orientation; only entry sums and squares are used.
double penalty(const DenseMatrix& g, const DenseMatrix& f, const NmfConfig& cfg) noexcept;

/// ½‖V − GF‖² from Gᵀ, F, and ‖GF‖² = ⟨GᵀG, FFᵀ⟩. The residual is summed
/// exactly over stored entries; only the implicit zeros use the Gram identity.
double residual_objective(const DataMatrix& v, const DenseMatrix& gt, const DenseMatrix& f,
                          double gf_norm_sq);

FitResult fit(const DataMatrix& v, const NmfConfig& cfg);
FitResult fit(const DataMatrix& v, const NmfConfig& cfg, NmfModel init);

}  // namespace alo
