#pragma once

#include <string_view>

#include "alo/matrix.hpp"
#include "alo/nmf.hpp"
#include "alo/nqp.hpp"

namespace alo {

enum class BaselineKind { kMur, kPlainExactLineSearch };

std::string_view to_string(BaselineKind kind) noexcept;

/// One multiplicative update of F then G (Lee–Seung), with the L1/L2 weights
/// of cfg added to the denominators:
///   F ← F ∘ GᵀV ⊘ (GᵀGF + μ₁ + 2μ₂F + τ)
///   G ← G ∘ VFᵀ ⊘ (GFFᵀ + β₁ + 2β₂G + τ),  τ = 1e-12.
void mur_step(const DataMatrix& v, DenseMatrix& g, DenseMatrix& f, const NmfConfig& cfg = {});

/// MUR driver with the same log format as fit(). Each update counts as one
/// inner iteration per column and row, so k̄ = 1.
FitResult fit_mur(const DataMatrix& v, const NmfConfig& cfg, NmfModel init);

/// Exact line search on the unscaled problem with no coordinate descent.
/// Stops when ‖∇f̄‖² ≤ tol·‖∇f̄₀‖² or after max_iter steps.
NqpSolution plain_els_solve(const NqpProblem& p, std::span<const double> x0, double tol,
                            Index max_iter);

}  // namespace alo
