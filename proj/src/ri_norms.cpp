#include "qcmod/ri_norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcmod/errors.hpp"

namespace qcmod {

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::schatten: return "schatten";
    case NormKind::lorentz_p1: return "lorentz_p1";
    case NormKind::macaev: return "macaev";
    case NormKind::weights: return "weights";
  }
  return "?";
}

NormKind norm_kind_from_string(const std::string& s) {
  if (s == "schatten") return NormKind::schatten;
  if (s == "lorentz_p1") return NormKind::lorentz_p1;
  if (s == "macaev") return NormKind::macaev;
  if (s == "weights") return NormKind::weights;
  throw ValidationError("unknown norm kind '" + s + "' (allowed: schatten, lorentz_p1, macaev, weights)");
}

NormSpec NormSpec::schatten(double p) {
  NormSpec s;
  s.kind = NormKind::schatten;
  s.p = p;
  s.validate();
  return s;
}

NormSpec NormSpec::lorentz(double p) {
  NormSpec s;
  s.kind = NormKind::lorentz_p1;
  s.p = p;
  s.validate();
  return s;
}

NormSpec NormSpec::macaev() {
  NormSpec s;
  s.kind = NormKind::macaev;
  return s;
}

NormSpec NormSpec::from_weights(std::vector<double> w) {
  NormSpec s;
  s.kind = NormKind::weights;
  s.weights = std::move(w);
  s.validate();
  return s;
}

void NormSpec::validate() const {
  if (kind == NormKind::schatten || kind == NormKind::lorentz_p1) {
    if (!std::isfinite(p) || p < 1.0)
      throw ValidationError("norm: p must be a finite real >= 1, got " + std::to_string(p));
  }
  if (kind == NormKind::weights) {
    if (weights.empty()) throw ValidationError("norm: kind=weights requires a nonempty weight sequence");
    for (std::size_t j = 0; j < weights.size(); ++j) {
      if (!std::isfinite(weights[j]) || weights[j] < 0.0)
        throw ValidationError("norm: weights must be finite and nonnegative (index " + std::to_string(j) + ")");
      if (j > 0 && weights[j] > weights[j - 1])
        throw ValidationError("norm: weights must be nonincreasing (index " + std::to_string(j) + ")");
    }
  }
}

namespace {

std::size_t term_count(const NormSpec& spec, std::size_t n) {
  std::size_t m = n;
  if (spec.length_hint > 0) m = std::min(m, spec.length_hint);
  if (spec.kind == NormKind::weights) m = std::min(m, spec.weights.size());
  return m;
}

double weight_at(const NormSpec& spec, std::size_t j) {
  const double k = static_cast<double>(j + 1);
  switch (spec.kind) {
    case NormKind::lorentz_p1: return std::pow(k, -1.0 + 1.0 / spec.p);
    case NormKind::macaev: return 1.0 / k;
    case NormKind::weights: return spec.weights[j];
    case NormKind::schatten: break;
  }
  return 0.0;
}

std::vector<double> sorted_magnitudes(std::span<const double> s) {
  std::vector<double> a(s.size());
  std::transform(s.begin(), s.end(), a.begin(), [](double v) { return std::abs(v); });
  std::sort(a.begin(), a.end(), std::greater<>());
  return a;
}

// (sum a_j^p)^(1/p) for nonincreasing a, scaled by a_0 against overflow.
double schatten_sorted(const std::vector<double>& a, double p) {
  if (a.empty() || a.front() == 0.0) return 0.0;
  if (p == 1.0) {
    double acc = 0.0;
    for (double v : a) acc += v;
    return acc;
  }
  const double top = a.front();
  double acc = 0.0;
  for (double v : a) acc += std::pow(v / top, p);
  return top * std::pow(acc, 1.0 / p);
}

// Weight per rank with tied magnitudes sharing the group average.
// Zero magnitudes receive weight 0.
std::vector<double> tie_averaged_weights(const std::vector<double>& sorted, const NormSpec& spec) {
  const std::size_t n = sorted.size();
  const std::size_t m = term_count(spec, n);
  std::vector<double> w(n, 0.0);
  for (std::size_t j = 0; j < m; ++j) w[j] = weight_at(spec, j);
  std::size_t i = 0;
  while (i < n) {
    std::size_t k = i + 1;
    while (k < n && sorted[k] == sorted[i]) ++k;
    if (sorted[i] == 0.0) {
      std::fill(w.begin() + i, w.begin() + k, 0.0);
    } else if (k - i > 1) {
      const double avg = std::accumulate(w.begin() + i, w.begin() + k, 0.0) / static_cast<double>(k - i);
      std::fill(w.begin() + i, w.begin() + k, avg);
    }
    i = k;
  }
  return w;
}

std::vector<double> schatten_weights(const std::vector<double>& sorted, double p) {
  std::vector<double> w(sorted.size(), 0.0);
  const double nrm = schatten_sorted(sorted, p);
  if (nrm == 0.0) return w;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    if (sorted[j] == 0.0) continue;
    w[j] = (p == 1.0) ? 1.0 : std::pow(sorted[j] / nrm, p - 1.0);
  }
  return w;
}

// Weights aligned with a nonincreasing magnitude vector.
std::vector<double> rank_weights(const std::vector<double>& sorted, const NormSpec& spec) {
  if (spec.kind == NormKind::schatten) return schatten_weights(sorted, spec.p);
  return tie_averaged_weights(sorted, spec);
}

double sorted_norm(const std::vector<double>& a, const NormSpec& spec) {
  if (spec.kind == NormKind::schatten) return schatten_sorted(a, spec.p);
  const std::size_t m = term_count(spec, a.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) acc += weight_at(spec, j) * a[j];
  return acc;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::vector<double> induced_weights(const NormSpec& spec, std::size_t n) {
  spec.validate();
  if (n == 0) throw ValidationError("induced_weights: n must be >= 1");
  if (spec.kind == NormKind::schatten) return {};
  std::vector<double> w(n, 0.0);
  const std::size_t m = term_count(spec, n);
  for (std::size_t j = 0; j < m; ++j) w[j] = weight_at(spec, j);
  return w;
}

double vector_norm(std::span<const double> s, const NormSpec& spec) {
  spec.validate();
  return sorted_norm(sorted_magnitudes(s), spec);
}

std::vector<double> gauge_subgradient(std::span<const double> x, const NormSpec& spec) {
  spec.validate();
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(x[a]) > std::abs(x[b]); });
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < n; ++r) sorted[r] = std::abs(x[order[r]]);
  const std::vector<double> w = rank_weights(sorted, spec);
  std::vector<double> g(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double v = x[order[r]];
    g[order[r]] = v > 0 ? w[r] : (v < 0 ? -w[r] : 0.0);
  }
  return g;
}

double matrix_norm(const Mat& M, const NormSpec& spec, MatrixHint hint) {
  spec.validate();
  if (!M.allFinite()) throw NumericError("matrix_norm: non-finite entries");
  if (M.size() == 0) return 0.0;
  Vec s;
  if (hint == MatrixHint::general) {
    s = singular_values(M);
  } else {
    const Mat H = hint == MatrixHint::selfadjoint ? hermitian_part(M) : hermitian_part(cplx(0, 1) * M);
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("matrix_norm: eigensolver did not converge");
    s = es.eigenvalues().cwiseAbs();
  }
  return sorted_norm(sorted_magnitudes(std::span<const double>(s.data(), static_cast<std::size_t>(s.size()))), spec);
}

Mat norm_subgradient(const Mat& M, const NormSpec& spec, MatrixHint hint) {
  spec.validate();
  if (!M.allFinite()) throw NumericError("norm_subgradient: non-finite entries");
  if (M.size() == 0) return M;
  if (hint != MatrixHint::general) {
    const cplx phase = hint == MatrixHint::selfadjoint ? cplx(1, 0) : cplx(0, 1);
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(phase * M));
    if (es.info() != Eigen::Success) throw NumericError("norm_subgradient: eigensolver did not converge");
    const Vec& ev = es.eigenvalues();
    const Eigen::Index n = ev.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(ev(a)) > std::abs(ev(b)); });
    std::vector<double> sorted(n);
    for (Eigen::Index r = 0; r < n; ++r) sorted[r] = std::abs(ev(order[r]));
    const std::vector<double> w = rank_weights(sorted, spec);
    Vec signed_w = Vec::Zero(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index i = order[r];
      signed_w(i) = ev(i) > 0 ? w[r] : (ev(i) < 0 ? -w[r] : 0.0);
    }
    const Mat G = es.eigenvectors() * signed_w.asDiagonal() * es.eigenvectors().adjoint();
    return std::conj(phase) * G;
  }
  Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("norm_subgradient: SVD did not converge");
  const std::vector<double> sorted = to_std(svd.singularValues());
  const Vec w = to_vec(rank_weights(sorted, spec));
  return svd.matrixU() * w.asDiagonal() * svd.matrixV().adjoint();
}

}  // namespace qcmod
