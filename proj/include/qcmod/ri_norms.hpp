#pragma once

// Rearrangement-invariant norms on sequences and, through singular values,
// unitarily invariant norms on matrices.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qcmod/linalg.hpp"

namespace qcmod {

enum class NormKind { schatten, lorentz_p1, macaev, weights };

std::string to_string(NormKind kind);
NormKind norm_kind_from_string(const std::string& s);

/// Description of a symmetric gauge |.|_Phi.
///
/// schatten:   (sum s_j^p)^(1/p)
/// lorentz_p1: sum j^(-1+1/p) s*_j
/// macaev:     sum s*_j / j
/// weights:    sum w_j s*_j with a caller-supplied nonincreasing w
struct NormSpec {
  NormKind kind = NormKind::schatten;
  double p = 1.0;
  std::vector<double> weights;
  /// Maximum number of rearranged terms that enter a weighted sum; 0 = unbounded.
  std::size_t length_hint = 0;

  static NormSpec schatten(double p);
  static NormSpec lorentz(double p);
  static NormSpec macaev();
  static NormSpec from_weights(std::vector<double> w);

  /// Throws ValidationError on p < 1, non-finite p, or non-monotone / negative weights.
  void validate() const;

  bool weighted() const { return kind != NormKind::schatten; }

  friend bool operator==(const NormSpec&, const NormSpec&) = default;
};

/// (w_1..w_n) for weighted kinds; empty for schatten, which is not a weighted sum.
std::vector<double> induced_weights(const NormSpec& spec, std::size_t n);

/// Norm of a sequence; entries are taken in absolute value first.
double vector_norm(std::span<const double> s, const NormSpec& spec);

/// A subgradient of the gauge at x (entries may be signed). Tied magnitudes
/// share the average of their weights, so the result does not depend on order.
std::vector<double> gauge_subgradient(std::span<const double> x, const NormSpec& spec);

/// Structure hints enable the eigenvalue fast path (singular values = |eigenvalues|).
enum class MatrixHint { general, selfadjoint, skew_hermitian };

/// Gauge applied to the singular values of M.
double matrix_norm(const Mat& M, const NormSpec& spec, MatrixHint hint = MatrixHint::general);

/// G = U diag(w) V* with w a gauge subgradient at the singular values of M.
/// Satisfies norm(N) >= norm(M) + Re tr(G^*(N - M)) for every N.
Mat norm_subgradient(const Mat& M, const NormSpec& spec, MatrixHint hint = MatrixHint::general);

}  // namespace qcmod
