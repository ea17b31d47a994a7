#include "qcmod/ellipsoid.hpp"

#include <cmath>

namespace qcmod {

Vec HermitianCoords::to_vec(const Mat& H) const {
  Vec x(size());
  int k = 0;
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < m_; ++i) x(k++) = H(i, i).real();
  for (int i = 0; i < m_; ++i)
    for (int j = i + 1; j < m_; ++j) {
      x(k++) = r2 * H(i, j).real();
      if (!real_) x(k++) = r2 * H(i, j).imag();
    }
  return x;
}

Mat HermitianCoords::from_vec(const Vec& x) const {
  Mat H = Mat::Zero(m_, m_);
  int k = 0;
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < m_; ++i) H(i, i) = x(k++);
  for (int i = 0; i < m_; ++i)
    for (int j = i + 1; j < m_; ++j) {
      const double re = s * x(k++);
      const double im = real_ ? 0.0 : s * x(k++);
      H(i, j) = cplx(re, im);
      H(j, i) = cplx(re, -im);
    }
  return H;
}

EllipsoidResult ellipsoid_minimize(const std::function<CutOracle(const Vec&)>& oracle, const Vec& center, double radius,
                                   int max_iters, double abs_tol, std::optional<std::pair<Vec, double>> incumbent) {
  const Eigen::Index n = center.size();
  EllipsoidResult res;
  res.lower = -std::numeric_limits<double>::infinity();
  res.best_f = std::numeric_limits<double>::infinity();
  if (incumbent) {
    res.best_x = incumbent->first;
    res.best_f = incumbent->second;
  }
  if (n == 0) {
    const CutOracle o = oracle(center);
    res.best_x = center;
    res.best_f = std::min(res.best_f, o.value);
    res.lower = res.best_f;
    res.certified = true;
    return res;
  }
  Vec c = center;
  RMat H = RMat::Identity(n, n) * radius * radius;
  const double nd = static_cast<double>(n);
  for (int it = 0; it < max_iters; ++it) {
    res.iters = it + 1;
    const CutOracle o = oracle(c);
    double alpha = 0.0;
    if (o.feasible) {
      if (o.value < res.best_f) {
        res.best_f = o.value;
        res.best_x = c;
      }
    }
    const Vec Hg = H * o.grad;
    const double gHg = o.grad.dot(Hg);
    if (!(gHg > 0.0) || !std::isfinite(gHg)) {
      // zero subgradient at a feasible center: the center is optimal
      if (o.feasible) {
        res.lower = std::max(res.lower, o.value);
        res.certified = true;
      }
      break;
    }
    const double root = std::sqrt(gHg);
    if (o.feasible) {
      res.lower = std::max(res.lower, o.value - root);
      alpha = (o.value - res.best_f) / root;
    } else {
      alpha = o.value / root;
    }
    res.history.push_back(res.best_f);
    if (res.best_f - res.lower <= abs_tol) {
      res.certified = true;
      break;
    }
    if (alpha >= 1.0) {
      // the cut leaves no volume: every point of the ellipsoid is infeasible
      // or no better than the incumbent
      res.lower = std::max(res.lower, res.best_f);
      res.certified = std::isfinite(res.best_f);
      break;
    }
    const Vec b = Hg / root;
    if (n == 1) {
      const double half = std::sqrt(H(0, 0));
      const double sgn = o.grad(0) > 0 ? 1.0 : -1.0;
      // keep [c - half, c - alpha*half] in the descent direction
      const double new_half = 0.5 * (1.0 - alpha) * half;
      c(0) -= sgn * (alpha * half + new_half);
      H(0, 0) = new_half * new_half;
    } else {
      c -= ((1.0 + nd * alpha) / (nd + 1.0)) * b;
      H = (nd * nd / (nd * nd - 1.0)) * (1.0 - alpha * alpha) *
          (H - (2.0 * (1.0 + nd * alpha) / ((nd + 1.0) * (1.0 + alpha))) * (b * b.transpose()));
      H = 0.5 * (H + H.transpose()).eval();
    }
  }
  if (!std::isfinite(res.lower)) res.lower = res.best_f;
  return res;
}

}  // namespace qcmod
