#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "qcmod/kernels.hpp"

using namespace qcmod::kernels;

namespace {

// 5-point Laplacian on an n x n periodic grid.
Csr grid_laplacian(int n) {
  Csr M;
  M.rows = n * n;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int nb[4] = {((i + 1) % n) * n + j, ((i + n - 1) % n) * n + j, i * n + (j + 1) % n, i * n + (j + n - 1) % n};
      M.col.push_back(i * n + j);
      M.val.push_back(4.0);
      for (int k : nb) {
        M.col.push_back(k);
        M.val.push_back(-1.0);
      }
      M.row_ptr.push_back(static_cast<int>(M.col.size()));
    }
  }
  return M;
}

void BM_spmv(benchmark::State& st, Backend b) {
  const int n = static_cast<int>(st.range(0));
  const Csr M = grid_laplacian(n);
  std::vector<double> x(M.rows), y(M.rows);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  for (auto& v : x) v = U(rng);
  for (auto _ : st) {
    spmv(M, x, y, b);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(M.val.size()));
}

void BM_edges(benchmark::State& st, Backend b) {
  const int n = static_cast<int>(st.range(0));
  const int V = n * n;
  std::vector<int> from, to;
  for (int v = 0; v < V; ++v) {
    from.push_back(v);
    to.push_back((v + 1) % V);
    from.push_back(v);
    to.push_back((v + n) % V);
  }
  const Incidence inc = build_incidence(V, from, to);
  std::vector<double> u(V, 0.5), d(from.size()), g(V);
  for (int v = 0; v < V; ++v) u[v] = std::sin(0.01 * v);
  for (auto _ : st) {
    edge_differences(from, to, u, d, b);
    incidence_gather(inc, d, g, b);
    benchmark::DoNotOptimize(g.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_spmv, serial, Backend::serial)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK_CAPTURE(BM_spmv, openmp, Backend::openmp)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK_CAPTURE(BM_edges, serial, Backend::serial)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK_CAPTURE(BM_edges, openmp, Backend::openmp)->Arg(64)->Arg(256)->Arg(512);

BENCHMARK_MAIN();
