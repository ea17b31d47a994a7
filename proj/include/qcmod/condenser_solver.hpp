#pragma once

// Condenser quasicentral modulus
//   k_J(tau; P, Q) = inf { max_j |[A, T_j]|_{J_j} : 0 <= A <= I, AP = P, AQ = 0 }
// by projected subgradient descent on the middle block, with best-iterate
// tracking, seeded restarts and an ellipsoid polish for small blocks.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qcmod/operator_core.hpp"
#include "qcmod/ri_norms.hpp"

namespace qcmod {

enum class StepRule { diminishing, polyak_with_estimate };

std::string to_string(StepRule r);
StepRule step_rule_from_string(const std::string& s);

struct SolveOptions {
  int max_iters = 4000;
  /// Relative objective-change tolerance; also the relative gap target of the polish.
  double tol = 1e-7;
  StepRule step_rule = StepRule::diminishing;
  std::uint64_t seed = 0;
  /// Independent starts: 1/2 I first, then seeded random contractions.
  int restarts = 3;
  /// Step length a in a/sqrt(k+1); <= 0 selects half the feasible-set radius.
  double step_scale = 0.0;
  /// Target value for the Polyak rule; adaptive level estimate when absent.
  std::optional<double> target;
  /// Ellipsoid polish when the middle block has at most this many real parameters.
  int polish_max_params = 48;
  int polish_max_iters = 400000;
  /// Middle blocks tried before the regular restarts.
  std::vector<Mat> warm_starts;

  void validate() const;
};

struct SolveReport {
  /// Best objective found: an upper bound on the infimum.
  double value_upper = 0.0;
  /// Certified lower bound when the polish ran to completion.
  std::optional<double> value_lower;
  Mat minimizer_middle;
  Mat minimizer;  // embedded d x d operator
  std::vector<double> history;  // objective per iteration of the winning start
  std::vector<double> steps;
  std::vector<double> restart_values;
  FeasibilityResiduals residuals;
  bool converged = false;
  int iters = 0;
  int best_restart = 0;
  std::string method;
  double wall_time = 0.0;
};

SolveReport solve_condenser(const OperatorTuple& tau, const Condenser& c, std::span<const NormSpec> specs,
                            const SolveOptions& opts);

inline SolveReport solve_condenser(const OperatorTuple& tau, const Condenser& c, const NormSpec& spec,
                                   const SolveOptions& opts) {
  return solve_condenser(tau, c, std::span<const NormSpec>(&spec, 1), opts);
}

struct ScanReport {
  std::vector<SolveReport> entries;
  double sup = 0.0;
  /// monotone[i] is false when family[i] contains family[i-1] but the value dropped by more than tol.
  std::vector<bool> nested_monotone;
  bool monotone = true;
};

/// sup over P in the family of k_J(tau; P, Q). An empty family gives sup = 0.
ScanReport sup_over_projections(const OperatorTuple& tau, const std::vector<ProjectionSource>& P_family,
                                const ProjectionSource& Q, std::span<const NormSpec> specs, const SolveOptions& opts);

enum class Extrapolation { none, richardson, power_fit };

std::string to_string(Extrapolation e);
Extrapolation extrapolation_from_string(const std::string& s);

struct ExtrapolationResult {
  bool available = false;
  double limit = 0.0;
  /// Exponent e of the model v(R) = limit + a R^e (richardson fixes e = -1).
  double exponent = 0.0;
  double amplitude = 0.0;
  double residual = 0.0;
  /// Pure power law v = a R^e fitted in log-log coordinates.
  double loglog_exponent = 0.0;
  double loglog_r2 = 0.0;
  std::string note;
};

ExtrapolationResult extrapolate(std::span<const double> scales, std::span<const double> values, Extrapolation method);

struct ScaleProblem {
  double scale = 0.0;
  OperatorTuple tau;
  Condenser condenser;
};

struct SweepReport {
  std::vector<double> scales;
  std::vector<double> values;
  std::vector<bool> converged;
  std::vector<SolveReport> reports;
  ExtrapolationResult extrapolation;
};

/// Solves generator(i) for i in [0, count) (in parallel, merged by index) and
/// extrapolates the values along the scale parameter.
SweepReport scale_sweep(const std::function<ScaleProblem(int)>& generator, int count, std::span<const NormSpec> specs,
                        const SolveOptions& opts, Extrapolation method);

}  // namespace qcmod
