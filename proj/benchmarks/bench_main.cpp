#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "alo/baselines.hpp"
#include "alo/matrix.hpp"
#include "alo/nmf.hpp"
#include "alo/nqp.hpp"
#include "alo/parallel.hpp"

namespace {

using namespace alo;

DenseMatrix uniform(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

SparseMatrix sparse(Index rows, Index cols, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> val(0.1, 1.0);
  std::vector<SparseMatrix::Triplet> t;
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      if (keep(rng)) t.push_back({i, j, val(rng)});
    }
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(t));
}

// H = A^T A from a tall uniform A, h = -A^T b.
NqpProblem random_problem(Index r, std::mt19937_64& rng) {
  const DenseMatrix a = uniform(3 * r, r, rng);
  const DenseMatrix b = uniform(3 * r, 1, rng);
  NqpProblem p{gram(a), Vector(r, 0.0), Vector(r, 1.0)};
  for (Index k = 0; k < r; ++k) {
    double s = 0.0;
    for (Index i = 0; i < 3 * r; ++i) s += a(i, k) * b(i, 0);
    p.h[k] = -s;
  }
  return p;
}

void BM_NqpSolve(benchmark::State& state) {
  const Index r = static_cast<Index>(state.range(0));
  std::mt19937_64 rng(1);
  const NqpProblem p = random_problem(r, rng);
  Index inner = 0;
  for (auto _ : state) {
    StopState stop{0.0, 1e-10};
    const NqpSolution s = solve(p, stop, 10000);
    inner = s.inner_iterations;
    benchmark::DoNotOptimize(s.x.data());
  }
  state.counters["inner"] = static_cast<double>(inner);
}
BENCHMARK(BM_NqpSolve)->Arg(5)->Arg(20)->Arg(50)->Arg(100);

void BM_PlainEls(benchmark::State& state) {
  const Index r = static_cast<Index>(state.range(0));
  std::mt19937_64 rng(1);
  const NqpProblem p = random_problem(r, rng);
  Index inner = 0;
  for (auto _ : state) {
    const NqpSolution s = plain_els_solve(p, p.x0, 1e-10, 100000);
    inner = s.inner_iterations;
    benchmark::DoNotOptimize(s.x.data());
  }
  state.counters["inner"] = static_cast<double>(inner);
}
BENCHMARK(BM_PlainEls)->Arg(5)->Arg(20)->Arg(50);

// Warm E-step on sparse data; range(0) is the density in tenths of a percent.
void BM_EStepSparse(benchmark::State& state) {
  const Index n = 2000;
  const Index m = 5000;
  const Index r = 20;
  std::mt19937_64 rng(2);
  const DataMatrix v{sparse(n, m, static_cast<double>(state.range(0)) / 1000.0, rng)};
  const DenseMatrix g = uniform(n, r, rng);
  const DenseMatrix gt = g.transposed();
  const DenseMatrix q = gram(g);
  NmfConfig cfg;
  cfg.rank = r;
  DenseMatrix warm = uniform(r, m, rng);
  run_estep(v, gt, q, cfg, warm);
  for (auto _ : state) {
    state.PauseTiming();
    DenseMatrix f = warm;
    state.ResumeTiming();
    const ReduceResult res = run_estep(v, gt, q, cfg, f);
    benchmark::DoNotOptimize(res.y.data());
  }
  state.counters["nnz"] = static_cast<double>(nnz_of(v));
}
BENCHMARK(BM_EStepSparse)->Arg(5)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_FitDense(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const DataMatrix v{uniform(200, 300, rng)};
  NmfConfig cfg;
  cfg.rank = static_cast<Index>(state.range(0));
  cfg.max_outer = 20;
  cfg.rel_tol = 0.0;
  for (auto _ : state) {
    const FitResult res = fit(v, cfg);
    benchmark::DoNotOptimize(res.log.records.data());
  }
}
BENCHMARK(BM_FitDense)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
