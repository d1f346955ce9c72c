#pragma once

#include <vector>

#include "alo/matrix.hpp"
#include "alo/nmf.hpp"
#include "alo/nqp.hpp"

namespace alo {

/// Half-open index range [begin, end).
struct Shard {
  Index begin = 0;
  Index end = 0;

  Index size() const noexcept { return end - begin; }
  friend bool operator==(const Shard&, const Shard&) = default;
};

/// Contiguous shards in ascending order; reductions follow the same order.
struct WorkerPlan {
  std::vector<Shard> shards;

  Index workers() const noexcept { return shards.size(); }
};

/// Near-equal contiguous shards of [0, total); sizes differ by at most one.
/// More workers than items is clamped to one item per worker.
WorkerPlan plan(Index total, Index workers);

/// plan() applied to whole blocks of `block` indices, so every shard starts
/// on a block boundary (the last block may be short).
WorkerPlan plan_blocks(Index total, Index block, Index workers);

/// Worker-private E-step state: Y_part = Σ FᵢVᵢᵀ (r x n) and the upper
/// triangle of H_part = Σ FᵢFᵢᵀ (r x r) over the worker's columns.
struct WorkerAccumulator {
  DenseMatrix y_part;
  DenseMatrix h_part;
  StopState stop;
  Index inner_iterations = 0;
  Index high_water_reals = 0;
};

struct ReduceResult {
  DenseMatrix y;    // FVᵀ, r x n
  DenseMatrix h_f;  // FFᵀ, r x r, symmetric
  Index inner_iterations = 0;
  Index high_water_reals = 0;  // max over workers
};

/// Solves the E-step NQP for every column in `shard` (warm-started from and
/// written back to the same columns of f) and accumulates Y_part, H_part.
/// gt is Gᵀ (r x n); q_g = GᵀG.
WorkerAccumulator map_estep(const Shard& shard, const DataMatrix& v, const DenseMatrix& gt,
                            const DenseMatrix& q_g, const NmfConfig& cfg, DenseMatrix& f);

/// Sums parts in the given (ascending shard) order and mirrors H_f.
ReduceResult reduce(const std::vector<WorkerAccumulator>& parts);

/// Column chunks for the E-step: whole stop blocks, at most cfg.reduce_chunks
/// of them, determined by m and the config only.
WorkerPlan estep_chunks(Index m, const NmfConfig& cfg);

struct MStepPart {
  Index inner_iterations = 0;
  Index high_water_reals = 0;
};

/// Solves the M-step NQP for every row j in `shard`, updating column j of gt.
MStepPart map_mstep(const Shard& shard, const DenseMatrix& h_f, const DenseMatrix& y,
                    const NmfConfig& cfg, DenseMatrix& gt);

/// Full E-step over all columns using cfg.workers threads. Chunks are dealt
/// round-robin; each worker's partial sum for a chunk is folded into the
/// result in ascending chunk order, so the output does not depend on the
/// number of workers.
ReduceResult run_estep(const DataMatrix& v, const DenseMatrix& gt, const DenseMatrix& q_g,
                       const NmfConfig& cfg, DenseMatrix& f);

/// Full M-step; sharded only when n·r² exceeds cfg.mstep_parallel_flops.
MStepPart run_mstep(const DenseMatrix& h_f, const DenseMatrix& y, const NmfConfig& cfg,
                    DenseMatrix& gt);

}  // namespace alo
