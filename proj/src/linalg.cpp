#include "qcmod/linalg.hpp"

#include "qcmod/errors.hpp"

namespace qcmod {

Vec singular_values(const Mat& M) {
  if (M.size() == 0) return Vec();
  Eigen::BDCSVD<Mat> svd(M);
  if (svd.info() != Eigen::Success) throw NumericError("singular_values: SVD did not converge");
  return svd.singularValues();
}

double opnorm(const Mat& M) {
  if (M.size() == 0) return 0.0;
  return singular_values(M)(0);
}

bool is_real(const Mat& M) { return (M.imag().array() == 0.0).all(); }

Mat random_unitary(int d, std::mt19937_64& rng, bool real_only) {
  std::normal_distribution<double> g;
  Mat Z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) Z(i, j) = real_only ? cplx(g(rng), 0.0) : cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(Z);
  Mat Q = qr.householderQ();
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix the phases so the distribution is Haar
  for (int j = 0; j < d; ++j) {
    const cplx r = R(j, j);
    const double a = std::abs(r);
    if (a > 0) Q.col(j) *= r / a;
  }
  return Q;
}

Mat random_hermitian(int d, std::mt19937_64& rng, bool real_only) {
  std::normal_distribution<double> g;
  Mat Z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) Z(i, j) = real_only ? cplx(g(rng), 0.0) : cplx(g(rng), g(rng));
  return hermitian_part(Z);
}

Mat random_contraction(int m, std::mt19937_64& rng, bool real_only) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Mat V = random_unitary(m, rng, real_only);
  Vec ev(m);
  for (int i = 0; i < m; ++i) ev(i) = u(rng);
  Mat B = hermitian_part(V * ev.cast<cplx>().asDiagonal() * V.adjoint());
  if (real_only) B = B.real().cast<cplx>();
  return B;
}

}  // namespace qcmod
