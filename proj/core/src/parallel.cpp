#include "alo/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>

#include "alo/errors.hpp"

namespace alo {

namespace {

// Runs fn(w) for every shard index, one thread per shard beyond the first,
// and rethrows the lowest-indexed worker's exception after all have joined.
template <class Fn>
void run_workers(Index count, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](Index w) {
    try {
      fn(w);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (count <= 1) {
    if (count == 1) guarded(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(count - 1);
    for (Index w = 1; w < count; ++w) threads.emplace_back(guarded, w);
    guarded(0);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

WorkerPlan plan(Index total, Index workers) {
  if (workers < 1) throw SizeError("worker count must be at least 1");
  WorkerPlan p;
  const Index count = std::max<Index>(1, std::min(workers, total));
  const Index base = total / count;
  const Index extra = total % count;
  Index begin = 0;
  for (Index w = 0; w < count; ++w) {
    const Index len = base + (w < extra ? 1 : 0);
    p.shards.push_back({begin, begin + len});
    begin += len;
  }
  return p;
}

WorkerPlan plan_blocks(Index total, Index block, Index workers) {
  if (block < 1) throw SizeError("block size must be at least 1");
  const Index blocks = (total + block - 1) / block;
  WorkerPlan p = plan(blocks, workers);
  for (auto& s : p.shards) {
    s.begin = std::min(s.begin * block, total);
    s.end = std::min(s.end * block, total);
  }
  return p;
}

WorkerAccumulator map_estep(const Shard& shard, const DataMatrix& v, const DenseMatrix& gt,
                            const DenseMatrix& q_g, const NmfConfig& cfg, DenseMatrix& f) {
  const Index r = gt.rows();
  const Index n = gt.cols();
  if (rows_of(v) != n || f.rows() != r || f.cols() != cols_of(v) || q_g.rows() != r) {
    throw SizeError("E-step dimensions do not match");
  }
  if (shard.end > f.cols()) throw BoundsError("shard exceeds column count");

  WorkerAccumulator acc;
  acc.y_part = DenseMatrix(r, n);
  acc.h_part = DenseMatrix(r, r);
  acc.stop.epsilon = cfg.epsilon;

  NqpSolver solver(estep_hessian(q_g, cfg));
  Vector h(r);
  for (Index i = shard.begin; i < shard.end; ++i) {
    if (i == shard.begin || i % cfg.stop_block == 0) acc.stop.reset();
    project_column(v, i, gt, h);
    for (Index k = 0; k < r; ++k) h[k] = cfg.mu1 - h[k];

    auto fi = f.col(i);
    NqpSolution sol;
    try {
      sol = solver.solve(h, fi, acc.stop, cfg.inner_cap);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(e, NumericalFailure::Where::kColumn, i);
    }
    std::copy(sol.x.begin(), sol.x.end(), fi.begin());
    acc.inner_iterations += sol.inner_iterations;

    symmetric_rank_one_accumulate(acc.h_part, fi);
    for_each_nonzero(v, i, [&](Index j, double x) {
      auto yj = acc.y_part.col(j);
      for (Index k = 0; k < r; ++k) yj[k] += fi[k] * x;
    });
  }
  // Accumulators, solver buffers, the transient Hessian handed to the solver,
  // the linear term, and one solution (x, grad).
  acc.high_water_reals = acc.y_part.size() + acc.h_part.size() + solver.buffer_reals() +
                         r * r + h.size() + 2 * r;
  return acc;
}

namespace {

void fold(ReduceResult& out, const WorkerAccumulator& p) {
  if (p.y_part.rows() != out.y.rows() || p.y_part.cols() != out.y.cols() ||
      p.h_part.rows() != out.h_f.rows() || p.h_part.cols() != out.h_f.cols()) {
    throw SizeError("worker accumulators have mismatched shapes");
  }
  auto y = out.y.data();
  auto py = p.y_part.data();
  for (Index k = 0; k < y.size(); ++k) y[k] += py[k];
  auto hf = out.h_f.data();
  auto ph = p.h_part.data();
  for (Index k = 0; k < hf.size(); ++k) hf[k] += ph[k];
  out.inner_iterations += p.inner_iterations;
  out.high_water_reals = std::max(out.high_water_reals, p.high_water_reals);
}

}  // namespace

ReduceResult reduce(const std::vector<WorkerAccumulator>& parts) {
  if (parts.empty()) throw SizeError("nothing to reduce");
  ReduceResult out;
  out.y = DenseMatrix(parts.front().y_part.rows(), parts.front().y_part.cols());
  out.h_f = DenseMatrix(parts.front().h_part.rows(), parts.front().h_part.cols());
  for (const auto& p : parts) fold(out, p);
  mirror_upper(out.h_f);
  return out;
}

WorkerPlan estep_chunks(Index m, const NmfConfig& cfg) {
  const Index blocks = (m + cfg.stop_block - 1) / cfg.stop_block;
  const Index per_chunk = std::max<Index>(1, (blocks + cfg.reduce_chunks - 1) / cfg.reduce_chunks);
  const Index width = per_chunk * cfg.stop_block;
  WorkerPlan p;
  for (Index b = 0; b < m; b += width) p.shards.push_back({b, std::min(m, b + width)});
  if (p.shards.empty()) p.shards.push_back({0, 0});
  return p;
}

MStepPart map_mstep(const Shard& shard, const DenseMatrix& h_f, const DenseMatrix& y,
                    const NmfConfig& cfg, DenseMatrix& gt) {
  const Index r = gt.rows();
  if (h_f.rows() != r || y.rows() != r || y.cols() != gt.cols()) {
    throw SizeError("M-step dimensions do not match");
  }
  if (shard.end > gt.cols()) throw BoundsError("shard exceeds row count");

  MStepPart part;
  StopState stop;
  stop.epsilon = cfg.epsilon;
  NqpSolver solver(mstep_hessian(h_f, cfg));
  Vector h(r);
  for (Index j = shard.begin; j < shard.end; ++j) {
    if (j == shard.begin || j % cfg.stop_block == 0) stop.reset();
    const auto yj = y.col(j);
    for (Index k = 0; k < r; ++k) h[k] = cfg.beta1 - yj[k];
    auto gj = gt.col(j);
    NqpSolution sol;
    try {
      sol = solver.solve(h, gj, stop, cfg.inner_cap);
    } catch (const NumericalFailure& e) {
      throw NumericalFailure(e, NumericalFailure::Where::kRow, j);
    }
    std::copy(sol.x.begin(), sol.x.end(), gj.begin());
    part.inner_iterations += sol.inner_iterations;
  }
  part.high_water_reals = solver.buffer_reals() + r * r + h.size() + 2 * r;
  return part;
}

ReduceResult run_estep(const DataMatrix& v, const DenseMatrix& gt, const DenseMatrix& q_g,
                       const NmfConfig& cfg, DenseMatrix& f) {
  const WorkerPlan chunks = estep_chunks(cols_of(v), cfg);
  const Index count = chunks.workers();
  const Index workers = std::min(cfg.workers, count);

  ReduceResult out;
  out.y = DenseMatrix(gt.rows(), gt.cols());
  out.h_f = DenseMatrix(gt.rows(), gt.rows());
  std::mutex mu;
  std::condition_variable turn;
  Index next = 0;
  bool aborted = false;

  run_workers(workers, [&](Index w) {
    try {
      for (Index c = w; c < count; c += workers) {
        const WorkerAccumulator part = map_estep(chunks.shards[c], v, gt, q_g, cfg, f);
        std::unique_lock lock(mu);
        turn.wait(lock, [&] { return next == c || aborted; });
        if (aborted) return;
        fold(out, part);
        ++next;
        turn.notify_all();
      }
    } catch (...) {
      {
        std::lock_guard lock(mu);
        aborted = true;
      }
      turn.notify_all();
      throw;
    }
  });
  mirror_upper(out.h_f);
  return out;
}

MStepPart run_mstep(const DenseMatrix& h_f, const DenseMatrix& y, const NmfConfig& cfg,
                    DenseMatrix& gt) {
  const Index n = gt.cols();
  const double r = static_cast<double>(gt.rows());
  const double flops = static_cast<double>(n) * r * r;
  const Index workers = flops > cfg.mstep_parallel_flops ? cfg.workers : 1;
  const WorkerPlan p = plan_blocks(n, cfg.stop_block, workers);
  std::vector<MStepPart> parts(p.workers());
  run_workers(p.workers(),
              [&](Index w) { parts[w] = map_mstep(p.shards[w], h_f, y, cfg, gt); });
  MStepPart total;
  for (const auto& part : parts) {
    total.inner_iterations += part.inner_iterations;
    total.high_water_reals = std::max(total.high_water_reals, part.high_water_reals);
  }
  return total;
}

}  // namespace alo
