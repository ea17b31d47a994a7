#include "qcmod/kernels.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qcmod/errors.hpp"

namespace qcmod::kernels {

Backend default_backend() {
#ifdef _OPENMP
  return Backend::openmp;
#else
  return Backend::serial;
#endif
}

int configure_threads_from_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("QCMOD_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1)
      throw ValidationError(std::string("QCMOD_THREADS must be a positive integer, got '") + env + "'");
    omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void spmv(const Csr& M, std::span<const double> x, std::span<double> y, Backend b) {
  const int n = M.rows;
  auto row = [&](int i) {
    double acc = 0.0;
    for (int k = M.row_ptr[i]; k < M.row_ptr[i + 1]; ++k)
      acc += M.val[k] * x[static_cast<std::size_t>(M.col[k])];
    y[i] = acc;
  };
  if (b == Backend::serial) {
    for (int i = 0; i < n; ++i) row(i);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) row(i);
}

void edge_differences(std::span<const int> from, std::span<const int> to, std::span<const double> u,
                      std::span<double> out, Backend b) {
  const int m = static_cast<int>(from.size());
  auto at = [&](int v) { return v < 0 ? 0.0 : u[v]; };
  if (b == Backend::serial) {
    for (int e = 0; e < m; ++e) out[e] = at(to[e]) - at(from[e]);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int e = 0; e < m; ++e) out[e] = at(to[e]) - at(from[e]);
}

Incidence build_incidence(int vertices, std::span<const int> from, std::span<const int> to) {
  Incidence inc;
  inc.vertices = vertices;
  std::vector<int> count(vertices, 0);
  for (std::size_t e = 0; e < from.size(); ++e) {
    if (from[e] >= 0) ++count[from[e]];
    if (to[e] >= 0) ++count[to[e]];
  }
  inc.ptr.assign(vertices + 1, 0);
  for (int v = 0; v < vertices; ++v) inc.ptr[v + 1] = inc.ptr[v] + count[v];
  inc.edge.resize(static_cast<std::size_t>(inc.ptr.back()));
  inc.sign.resize(static_cast<std::size_t>(inc.ptr.back()));
  std::vector<int> fill(inc.ptr.begin(), inc.ptr.end() - 1);
  for (std::size_t e = 0; e < from.size(); ++e) {
    if (to[e] >= 0) {
      const int k = fill[to[e]]++;
      inc.edge[k] = static_cast<int>(e);
      inc.sign[k] = 1.0;
    }
    if (from[e] >= 0) {
      const int k = fill[from[e]]++;
      inc.edge[k] = static_cast<int>(e);
      inc.sign[k] = -1.0;
    }
  }
  return inc;
}

void incidence_gather(const Incidence& inc, std::span<const double> g, std::span<double> grad, Backend b) {
  auto vertex = [&](int v) {
    double acc = 0.0;
    for (int k = inc.ptr[v]; k < inc.ptr[v + 1]; ++k)
      acc += inc.sign[k] * g[static_cast<std::size_t>(inc.edge[k])];
    grad[v] = acc;
  };
  if (b == Backend::serial) {
    for (int v = 0; v < inc.vertices; ++v) vertex(v);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int v = 0; v < inc.vertices; ++v) vertex(v);
}

}  // namespace qcmod::kernels
