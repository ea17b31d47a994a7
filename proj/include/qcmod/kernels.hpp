#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP variant; both produce bitwise-identical results (no parallel
// reductions, each output element is written by exactly one thread).

#include <span>
#include <vector>

namespace qcmod::kernels {

enum class Backend { serial, openmp };

/// openmp when the library was built with OpenMP, serial otherwise.
Backend default_backend();

/// Applies QCMOD_THREADS (positive integer) to the OpenMP runtime; returns the thread count in effect.
int configure_threads_from_env();

/// Compressed sparse rows.
struct Csr {
  int rows = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col;
  std::vector<double> val;
};

/// y = M x
void spmv(const Csr& M, std::span<const double> x, std::span<double> y, Backend b = default_backend());

/// out[e] = u[to[e]] - u[from[e]], with index -1 standing for a zero value.
void edge_differences(std::span<const int> from, std::span<const int> to, std::span<const double> u,
                      std::span<double> out, Backend b = default_backend());

/// Vertex -> incident (edge, sign) lists, so the adjoint of edge_differences
/// can be evaluated as a gather.
struct Incidence {
  int vertices = 0;
  std::vector<int> ptr{0};
  std::vector<int> edge;
  std::vector<double> sign;
};

Incidence build_incidence(int vertices, std::span<const int> from, std::span<const int> to);

/// grad[v] = sum over incident edges of sign * g[e]
void incidence_gather(const Incidence& inc, std::span<const double> g, std::span<double> grad,
                      Backend b = default_backend());

}  // namespace qcmod::kernels
