#pragma once

// Operator tuples, condensers (orthogonal projection pairs) and the block
// parametrization A = P + W B W^* of the contraction set
//   { 0 <= A <= I : AP = P, AQ = 0 },
// where W is an orthonormal basis of ran(I - P - Q).

#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "qcmod/linalg.hpp"
#include "qcmod/ri_norms.hpp"

namespace qcmod {

/// tau = (T_1, ..., T_n), all d x d.
class OperatorTuple {
 public:
  OperatorTuple() = default;
  /// selfadjoint may be empty (all false). Flagged components are checked
  /// against ||T - T^*||_F <= 1e-12 ||T||_F and then symmetrized.
  explicit OperatorTuple(std::vector<Mat> components, std::vector<bool> selfadjoint = {});

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(components_.size()); }
  const Mat& operator[](int j) const { return components_[static_cast<std::size_t>(j)]; }
  const std::vector<Mat>& components() const { return components_; }
  bool selfadjoint(int j) const { return selfadjoint_[static_cast<std::size_t>(j)]; }
  const std::vector<bool>& selfadjoint_flags() const { return selfadjoint_; }
  bool all_selfadjoint() const;
  bool real() const;

  /// (U T_1 U^*, ..., U T_n U^*)
  OperatorTuple conjugated(const Mat& U) const;
  OperatorTuple scaled(double c) const;

 private:
  int dim_ = 0;
  std::vector<Mat> components_;
  std::vector<bool> selfadjoint_;
};

/// A projection given either as a basis-index set of the standard basis or
/// as an explicit matrix.
using ProjectionSource = std::variant<std::vector<int>, Mat>;

class Condenser {
 public:
  /// Validates P, Q (idempotent, selfadjoint, PQ = 0 within 1e-10) and builds
  /// an exact orthonormal block basis [ran P | middle | ran Q].
  static Condenser make(int dim, const ProjectionSource& P, const ProjectionSource& Q);

  int dim() const { return static_cast<int>(basis_.rows()); }
  int rank_p() const { return rank_p_; }
  int rank_q() const { return rank_q_; }
  int middle_dim() const { return dim() - rank_p_ - rank_q_; }

  const Mat& P() const { return P_; }
  const Mat& Q() const { return Q_; }
  /// d x m0 orthonormal basis of ran(I - P - Q).
  Mat middle_basis() const { return basis_.middleCols(rank_p_, middle_dim()); }
  Mat p_basis() const { return basis_.leftCols(rank_p_); }
  Mat q_basis() const { return basis_.rightCols(rank_q_); }
  /// Unitary whose columns are the P, middle and Q bases in that order.
  const Mat& block_basis() const { return basis_; }
  bool real() const { return real_; }
  /// Basis indices when the condenser came from coordinate projections.
  const std::vector<int>& p_indices() const { return p_indices_; }
  const std::vector<int>& q_indices() const { return q_indices_; }

  /// (U P U^*, U Q U^*) as matrix inputs.
  Condenser conjugated(const Mat& U) const;

 private:
  Mat P_, Q_, basis_;
  int rank_p_ = 0, rank_q_ = 0;
  bool real_ = true;
  std::vector<int> p_indices_, q_indices_;
};

inline Condenser make_condenser(int dim, const ProjectionSource& P, const ProjectionSource& Q) {
  return Condenser::make(dim, P, Q);
}

/// Element of the feasible set, stored through its middle block B0
/// (m0 x m0 Hermitian, spectrum in [0, 1]).
class ContractionVariable {
 public:
  ContractionVariable() = default;
  ContractionVariable(std::shared_ptr<const Condenser> c, Mat middle);

  const Mat& middle_block() const { return middle_; }
  const Condenser& condenser() const { return *condenser_; }
  std::shared_ptr<const Condenser> condenser_ptr() const { return condenser_; }

 private:
  std::shared_ptr<const Condenser> condenser_;
  Mat middle_;
};

/// A = P + W B0 W^*.
Mat embed(const Condenser& c, const Mat& middle);
Mat embed(const ContractionVariable& v);

/// Compress to the middle block, symmetrize, clip the spectrum to [0, 1].
Mat project_middle(const Mat& B);
ContractionVariable project_to_feasible(std::shared_ptr<const Condenser> c, const Mat& A_raw);

/// W^* A W, Hermitian part.
Mat compress_to_middle(const Condenser& c, const Mat& A);

/// Stacked ([T_1, A]; ...; [T_n, A]), nd x d.
Mat commutator_column(const OperatorTuple& tau, const Mat& A);
/// [A, T_j] for each j.
std::vector<Mat> commutators(const OperatorTuple& tau, const Mat& A);

/// max_j |[A, T_j]|_{J_j}. specs holds one spec (broadcast) or one per component.
double objective(const OperatorTuple& tau, const Mat& A, std::span<const NormSpec> specs);

/// Residuals ||AP - P||_F, ||AQ||_F, and the spectral violation of 0 <= A <= I.
struct FeasibilityResiduals {
  double ap_minus_p = 0.0;
  double aq = 0.0;
  double below_zero = 0.0;
  double above_one = 0.0;
  double max() const;
};
FeasibilityResiduals feasibility(const Condenser& c, const Mat& A);

}  // namespace qcmod
