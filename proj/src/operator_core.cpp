#include "qcmod/operator_core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qcmod/errors.hpp"

namespace qcmod {

OperatorTuple::OperatorTuple(std::vector<Mat> components, std::vector<bool> selfadjoint)
    : components_(std::move(components)), selfadjoint_(std::move(selfadjoint)) {
  if (components_.empty()) throw ValidationError("operator tuple: at least one component required");
  if (selfadjoint_.empty()) selfadjoint_.assign(components_.size(), false);
  if (selfadjoint_.size() != components_.size())
    throw ValidationError("operator tuple: selfadjoint flag count does not match component count");
  dim_ = static_cast<int>(components_.front().rows());
  if (dim_ < 1) throw ValidationError("operator tuple: dimension must be positive");
  for (std::size_t j = 0; j < components_.size(); ++j) {
    Mat& T = components_[j];
    if (T.rows() != dim_ || T.cols() != dim_)
      throw ValidationError("operator tuple: component " + std::to_string(j) + " is not " + std::to_string(dim_) +
                            "x" + std::to_string(dim_));
    if (!T.allFinite()) throw ValidationError("operator tuple: component " + std::to_string(j) + " has non-finite entries");
    if (selfadjoint_[j]) {
      const double asym = (T - T.adjoint()).norm();
      if (asym > 1e-12 * T.norm())
        throw ValidationError("operator tuple: component " + std::to_string(j) + " flagged selfadjoint but ||T - T*||_F = " +
                              std::to_string(asym));
      T = hermitian_part(T);
    }
  }
}

bool OperatorTuple::all_selfadjoint() const {
  return std::all_of(selfadjoint_.begin(), selfadjoint_.end(), [](bool b) { return b; });
}

bool OperatorTuple::real() const {
  return std::all_of(components_.begin(), components_.end(), [](const Mat& T) { return is_real(T); });
}

OperatorTuple OperatorTuple::conjugated(const Mat& U) const {
  std::vector<Mat> out;
  out.reserve(components_.size());
  for (const Mat& T : components_) {
    Mat C = U * T * U.adjoint();
    out.push_back(std::move(C));
  }
  // conjugation preserves selfadjointness exactly in theory; re-symmetrize for roundoff
  for (std::size_t j = 0; j < out.size(); ++j)
    if (selfadjoint_[j]) out[j] = hermitian_part(out[j]);
  return OperatorTuple(std::move(out), selfadjoint_);
}

OperatorTuple OperatorTuple::scaled(double c) const {
  std::vector<Mat> out;
  for (const Mat& T : components_) out.push_back(c * T);
  return OperatorTuple(std::move(out), selfadjoint_);
}

namespace {

constexpr double kProjTol = 1e-10;

Mat indices_to_projection(int dim, const std::vector<int>& idx) {
  Mat P = Mat::Zero(dim, dim);
  for (int i : idx) P(i, i) = 1.0;
  return P;
}

void check_indices(int dim, const std::vector<int>& idx, const char* name) {
  std::set<int> seen;
  for (int i : idx) {
    if (i < 0 || i >= dim)
      throw ValidationError(std::string("condenser: ") + name + " index " + std::to_string(i) + " outside [0, " +
                            std::to_string(dim) + ")");
    if (!seen.insert(i).second)
      throw ValidationError(std::string("condenser: duplicate ") + name + " index " + std::to_string(i));
  }
}

// Orthonormal basis of ran(P) for a validated projection P (eigenvalues near 0 or 1).
Mat range_basis(const Mat& P, bool real) {
  if (real) {
    Eigen::SelfAdjointEigenSolver<RMat> es(P.real());
    std::vector<int> cols;
    for (int i = static_cast<int>(es.eigenvalues().size()) - 1; i >= 0; --i)
      if (es.eigenvalues()(i) > 0.5) cols.push_back(i);
    Mat B(P.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) B.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(cols[k]).cast<cplx>();
    return B;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  std::vector<int> cols;
  for (int i = static_cast<int>(es.eigenvalues().size()) - 1; i >= 0; --i)
    if (es.eigenvalues()(i) > 0.5) cols.push_back(i);
  Mat B(P.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) B.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(cols[k]);
  return B;
}

void check_projection(const Mat& P, int dim, const char* name) {
  if (P.rows() != dim || P.cols() != dim)
    throw ValidationError(std::string("condenser: ") + name + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
  if (!P.allFinite()) throw ValidationError(std::string("condenser: ") + name + " has non-finite entries");
  const double scale = std::max(1.0, P.norm());
  if ((P - P.adjoint()).norm() > kProjTol * scale)
    throw ValidationError(std::string("condenser: ") + name + " is not selfadjoint");
  if ((P * P - P).norm() > kProjTol * scale) throw ValidationError(std::string("condenser: ") + name + " is not idempotent");
}

}  // namespace

Condenser Condenser::make(int dim, const ProjectionSource& Psrc, const ProjectionSource& Qsrc) {
  if (dim < 1) throw ValidationError("condenser: dimension must be positive");
  Condenser c;
  const auto* pi = std::get_if<std::vector<int>>(&Psrc);
  const auto* qi = std::get_if<std::vector<int>>(&Qsrc);
  if (pi && qi) {
    check_indices(dim, *pi, "P");
    check_indices(dim, *qi, "Q");
    std::vector<int> p = *pi, q = *qi;
    std::sort(p.begin(), p.end());
    std::sort(q.begin(), q.end());
    std::vector<int> overlap;
    std::set_intersection(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(overlap));
    if (!overlap.empty())
      throw CondenserError("condenser: P and Q share basis index " + std::to_string(overlap.front()) + " (PQ != 0)");
    std::vector<int> mid;
    for (int i = 0; i < dim; ++i)
      if (!std::binary_search(p.begin(), p.end(), i) && !std::binary_search(q.begin(), q.end(), i)) mid.push_back(i);
    c.basis_ = Mat::Zero(dim, dim);
    int col = 0;
    for (int i : p) c.basis_(i, col++) = 1.0;
    for (int i : mid) c.basis_(i, col++) = 1.0;
    for (int i : q) c.basis_(i, col++) = 1.0;
    c.rank_p_ = static_cast<int>(p.size());
    c.rank_q_ = static_cast<int>(q.size());
    c.P_ = indices_to_projection(dim, p);
    c.Q_ = indices_to_projection(dim, q);
    c.real_ = true;
    c.p_indices_ = p;
    c.q_indices_ = q;
    return c;
  }

  const Mat P = pi ? indices_to_projection(dim, *pi) : std::get<Mat>(Psrc);
  const Mat Q = qi ? indices_to_projection(dim, *qi) : std::get<Mat>(Qsrc);
  if (pi) check_indices(dim, *pi, "P");
  if (qi) check_indices(dim, *qi, "Q");
  check_projection(P, dim, "P");
  check_projection(Q, dim, "Q");
  const double pq = (P * Q).norm();
  if (pq > kProjTol)
    throw CondenserError("condenser: projections are not orthogonal, ||PQ||_F = " + std::to_string(pq));

  c.real_ = is_real(P) && is_real(Q);
  const Mat Up = range_basis(hermitian_part(P), c.real_);
  Mat Uq = range_basis(hermitian_part(Q), c.real_);
  // re-orthogonalize Q's range against P's exactly
  if (Up.cols() > 0 && Uq.cols() > 0) {
    Uq -= Up * (Up.adjoint() * Uq);
    Eigen::HouseholderQR<Mat> qr(Uq);
    Uq = qr.householderQ() * Mat::Identity(Uq.rows(), Uq.cols());
  }
  const int rp = static_cast<int>(Up.cols()), rq = static_cast<int>(Uq.cols());
  Mat joint(dim, rp + rq);
  joint << Up, Uq;
  Mat full;
  if (rp + rq > 0) {
    Eigen::HouseholderQR<Mat> qr(joint);
    full = qr.householderQ();
  } else {
    full = Mat::Identity(dim, dim);
  }
  const int m0 = dim - rp - rq;
  c.basis_.resize(dim, dim);
  c.basis_ << Up, full.rightCols(m0), Uq;
  if (c.real_) c.basis_ = c.basis_.real().cast<cplx>();
  c.rank_p_ = rp;
  c.rank_q_ = rq;
  c.P_ = Up * Up.adjoint();
  c.Q_ = Uq * Uq.adjoint();
  if (c.real_) {
    c.P_ = c.P_.real().cast<cplx>();
    c.Q_ = c.Q_.real().cast<cplx>();
  }
  return c;
}

Condenser Condenser::conjugated(const Mat& U) const {
  return Condenser::make(dim(), Mat(U * P_ * U.adjoint()), Mat(U * Q_ * U.adjoint()));
}

ContractionVariable::ContractionVariable(std::shared_ptr<const Condenser> c, Mat middle)
    : condenser_(std::move(c)), middle_(std::move(middle)) {
  if (!condenser_) throw ValidationError("contraction variable: null condenser");
  const int m0 = condenser_->middle_dim();
  if (middle_.rows() != m0 || middle_.cols() != m0)
    throw ValidationError("contraction variable: middle block must be " + std::to_string(m0) + "x" + std::to_string(m0));
}

Mat embed(const Condenser& c, const Mat& middle) {
  if (middle.rows() != c.middle_dim() || middle.cols() != c.middle_dim())
    throw ValidationError("embed: middle block has wrong shape");
  if (c.middle_dim() == 0) return c.P();
  const Mat W = c.middle_basis();
  return c.P() + W * middle * W.adjoint();
}

Mat embed(const ContractionVariable& v) { return embed(v.condenser(), v.middle_block()); }

Mat project_middle(const Mat& B) {
  if (B.size() == 0) return B;
  return spectral_apply(hermitian_part(B), [](double x) { return std::clamp(x, 0.0, 1.0); });
}

Mat compress_to_middle(const Condenser& c, const Mat& A) {
  if (A.rows() != c.dim() || A.cols() != c.dim()) throw ValidationError("compress_to_middle: shape mismatch");
  const Mat W = c.middle_basis();
  return hermitian_part(W.adjoint() * A * W);
}

ContractionVariable project_to_feasible(std::shared_ptr<const Condenser> c, const Mat& A_raw) {
  Mat B = project_middle(compress_to_middle(*c, A_raw));
  return ContractionVariable(std::move(c), std::move(B));
}

std::vector<Mat> commutators(const OperatorTuple& tau, const Mat& A) {
  if (A.rows() != tau.dim() || A.cols() != tau.dim()) throw ValidationError("commutators: dimension mismatch");
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(tau.size()));
  for (int j = 0; j < tau.size(); ++j) out.push_back(commutator(A, tau[j]));
  return out;
}

Mat commutator_column(const OperatorTuple& tau, const Mat& A) {
  if (A.rows() != tau.dim() || A.cols() != tau.dim()) throw ValidationError("commutator_column: dimension mismatch");
  const int d = tau.dim();
  Mat col(static_cast<Eigen::Index>(tau.size()) * d, d);
  for (int j = 0; j < tau.size(); ++j) col.middleRows(static_cast<Eigen::Index>(j) * d, d) = commutator(tau[j], A);
  return col;
}

double objective(const OperatorTuple& tau, const Mat& A, std::span<const NormSpec> specs) {
  if (specs.size() != 1 && specs.size() != static_cast<std::size_t>(tau.size()))
    throw ValidationError("objective: expected 1 or " + std::to_string(tau.size()) + " norm specs, got " +
                          std::to_string(specs.size()));
  if (A.rows() != tau.dim() || A.cols() != tau.dim()) throw ValidationError("objective: dimension mismatch");
  const bool a_herm = (A - A.adjoint()).norm() <= 1e-14 * std::max(1.0, A.norm());
  double best = 0.0;
  for (int j = 0; j < tau.size(); ++j) {
    const NormSpec& spec = specs.size() == 1 ? specs[0] : specs[j];
    const MatrixHint hint = (a_herm && tau.selfadjoint(j)) ? MatrixHint::skew_hermitian : MatrixHint::general;
    best = std::max(best, matrix_norm(commutator(A, tau[j]), spec, hint));
  }
  return best;
}

double FeasibilityResiduals::max() const { return std::max({ap_minus_p, aq, below_zero, above_one}); }

FeasibilityResiduals feasibility(const Condenser& c, const Mat& A) {
  FeasibilityResiduals r;
  r.ap_minus_p = (A * c.P() - c.P()).norm();
  r.aq = (A * c.Q()).norm();
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(A), Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  if (ev.size() > 0) {
    r.below_zero = std::max(0.0, -ev.minCoeff());
    r.above_one = std::max(0.0, ev.maxCoeff() - 1.0);
  }
  return r;
}

}  // namespace qcmod
