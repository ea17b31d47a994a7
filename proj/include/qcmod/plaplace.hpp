#pragma once

// Smooth condenser problem for C_p, 2 <= p < inf:
//   I(A) = tr(S^{p/2}),  S = -sum_j [A, T_j]^2,
// its gradient operator
//   Theta = sum_k [T_k, C_k G + G C_k],  C_k = [X, T_k],  G = S^{p/2 - 1},
// with grad I = -(p/2) Theta, minimization over the condenser contractions,
// Euler-Lagrange sign checks and uniqueness probes.

#include <string>
#include <vector>

#include "qcmod/condenser_solver.hpp"
#include "qcmod/operator_core.hpp"

namespace qcmod {

struct SmoothProblem {
  OperatorTuple tau;
  Condenser condenser;
  double p = 2.0;

  void validate() const;
};

struct ElTolerances {
  /// Level-set threshold for P1 (eigenvalues >= 1 - eps1) and Q1 (<= eps1).
  double eps1 = 1e-6;
  /// Sign slack relative to ||Theta||_op.
  double delta_rel = 1e-6;
};

struct ThetaReport {
  Mat Theta;
  Mat P1, Q1;
  int p1_rank = 0, q1_rank = 0;
  /// Eigenvalues of the compressions, restricted to the range of each compressing projection:
  /// (I - P - Q1) Theta (I - P - Q1), (I - P1 - Q) Theta (I - P1 - Q), (I - P1 - Q1) Theta (I - P1 - Q1).
  Vec first_eigs, second_eigs, third_eigs;
  double first_max = 0.0, second_min = 0.0, third_radius = 0.0;
  double eps1 = 0.0, delta = 0.0;
  double theta_opnorm = 0.0;
  // relations XP1 = P1, XQ1 = 0, P <= P1, Q <= Q1, P1 Q1 = 0 (Frobenius residuals)
  double xp1_residual = 0.0, xq1_residual = 0.0, p_in_p1 = 0.0, q_in_q1 = 0.0, p1q1 = 0.0;
  bool first_ok = true, second_ok = true, third_ok = true;
  /// All three stated sign conditions hold within delta.
  bool conditions_pass = true;
  /// Same checks with the two inequality directions exchanged.
  bool reversed_conditions_pass = true;
  bool boundary_ambiguous = false;
  std::vector<std::string> flags;
};

/// I(A) = tr(S(A)^{p/2}).
double smooth_objective(const SmoothProblem& prob, const Mat& A);

/// Theta only; the projection fields stay empty.
ThetaReport theta(const SmoothProblem& prob, const Mat& X);

/// Projected gradient with Armijo backtracking on the middle block, restarts as in solve_condenser.
SolveReport minimize_smooth(const SmoothProblem& prob, const SolveOptions& opts);

ThetaReport euler_lagrange_report(const SmoothProblem& prob, const Mat& X, const ElTolerances& tol = {});

struct PairDistance {
  int a = 0, b = 0;
  /// max_j ||[X_a, T_j] - [X_b, T_j]||_F
  double commutator_distance = 0.0;
  double operator_distance = 0.0;  // ||X_a - X_b||_F
};

struct UniquenessReport {
  std::vector<double> values;
  std::vector<bool> converged;
  std::vector<Mat> minimizers;
  std::vector<PairDistance> pairs;  // converged trials only
  double max_commutator_distance = 0.0;
  double max_operator_distance = 0.0;
  /// max_j ||T_j||_op
  double scale = 0.0;
  std::vector<int> excluded;
};

/// minimize_smooth from `trials` independent random starts (seeded from opts.seed).
UniquenessReport uniqueness_probe(const SmoothProblem& prob, const SolveOptions& opts, int trials);

}  // namespace qcmod
