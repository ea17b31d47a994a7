#pragma once

// Central-cut ellipsoid method with deep cuts, used to polish and certify
// small nonsmooth convex problems after a subgradient phase.

#include <functional>
#include <optional>
#include <vector>

#include "qcmod/linalg.hpp"

namespace qcmod {

struct CutOracle {
  bool feasible = true;
  /// Objective value when feasible, constraint violation (> 0) otherwise.
  double value = 0.0;
  /// Subgradient of the objective, or of the violated constraint.
  Vec grad;
};

struct EllipsoidResult {
  Vec best_x;
  double best_f = 0.0;
  /// Certified lower bound on the minimum over the initial ball.
  double lower = 0.0;
  int iters = 0;
  bool certified = false;
  std::vector<double> history;
};

/// Minimize over the ball |x - center| <= radius. The oracle is asked at
/// ellipsoid centers; stop once best_f - lower <= abs_tol.
EllipsoidResult ellipsoid_minimize(const std::function<CutOracle(const Vec&)>& oracle, const Vec& center, double radius,
                                   int max_iters, double abs_tol,
                                   std::optional<std::pair<Vec, double>> incumbent = std::nullopt);

/// Orthonormal coordinates for m x m Hermitian (or real symmetric) matrices
/// under the Frobenius inner product Re tr(X^* Y).
class HermitianCoords {
 public:
  HermitianCoords(int m, bool real_only) : m_(m), real_(real_only) {}
  int size() const { return real_ ? m_ * (m_ + 1) / 2 : m_ * m_; }
  Vec to_vec(const Mat& H) const;
  Mat from_vec(const Vec& x) const;

 private:
  int m_;
  bool real_;
};

}  // namespace qcmod
