#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace qcmod {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

/// XY - YX. The single commutator orientation used across the library.
inline Mat commutator(const Mat& X, const Mat& Y) { return X * Y - Y * X; }

inline Mat hermitian_part(const Mat& M) { return 0.5 * (M + M.adjoint()); }

/// Largest singular value.
double opnorm(const Mat& M);

/// Singular values, nonincreasing.
Vec singular_values(const Mat& M);

/// True when every imaginary part is exactly zero.
bool is_real(const Mat& M);

/// Spectral function of a Hermitian matrix, f applied to eigenvalues.
template <class F>
Mat spectral_apply(const Mat& H, F&& f) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  Vec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = f(ev(i));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// splitmix64 finalizer; used to derive independent per-task seeds from a root seed.
inline std::uint64_t mix_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Haar-distributed unitary (orthogonal when real_only) via QR of a Gaussian matrix.
Mat random_unitary(int d, std::mt19937_64& rng, bool real_only = false);

/// Random Hermitian matrix with Gaussian entries (real symmetric when real_only).
Mat random_hermitian(int d, std::mt19937_64& rng, bool real_only = false);

/// V diag(uniform[0,1]) V^* with V Haar; a random point of 0 <= B <= I.
Mat random_contraction(int m, std::mt19937_64& rng, bool real_only = false);

}  // namespace qcmod
