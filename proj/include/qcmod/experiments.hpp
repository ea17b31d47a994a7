#pragma once

// Exploratory pipelines around the exact modulus formulas: the one-variable
// constant 1/pi, constancy of k^n / integral(m) across multiplicity models,
// and hybrid exponent scans. All outputs are estimates with diagnostics;
// nothing here asserts the value of a constant.

#include <string>
#include <vector>

#include "qcmod/condenser_solver.hpp"

namespace qcmod {

/// Cyclic grid of size N, tau = (diag(j/N)), P = the M lowest trigonometric
/// modes (1, cos 1, sin 1, cos 2, ...), Q = every mode from index K on.
struct TimeFreqModel {
  int N = 64;
  int M = 4;
  int K = 32;
  void validate() const;
};

ScaleProblem tf_condenser(const TimeFreqModel& model);

/// M = ceil(sqrt(N)) rounded up to odd, K = N/4 rounded up to odd.
std::vector<TimeFreqModel> default_gamma1_schedule(const std::vector<int>& N_list);

struct Gamma1Report {
  SweepReport sweep;
  double estimate = 0.0;
  double reference = 0.0;  // 1/pi
  double ratio = 0.0;
  bool monotone = true;  // values nondecreasing along the schedule
  std::vector<std::string> notes;
};

Gamma1Report gamma1_experiment(const std::vector<TimeFreqModel>& schedule, const SolveOptions& opts,
                               Extrapolation method = Extrapolation::power_fit);

/// Multiplicity function on [0,1]^n: a step function on a cell grid, or the
/// depth-l Cantor-type product (c pieces of ratio r per coordinate) with m = 1.
struct MultiplicityModel {
  enum class Kind { step, cantor } kind = Kind::step;
  std::string name;
  int n = 1;
  std::vector<int> cells;         // step: cells per coordinate
  std::vector<int> multiplicity;  // step: row-major over cells
  double ratio = 1.0 / 3.0;       // cantor
  int pieces = 2;                 // cantor

  void validate() const;
  /// integral of m: exact cell sum for step models, Hutchinson mass (= 1) for cantor.
  double integral() const;
};

/// Cut rule for realized models: M = ceil(D^m_exponent), K = ceil(k_fraction * D),
/// each extended to the end of its Laplacian eigenvalue cluster.
struct CutRule {
  double m_exponent = 0.5;
  double k_fraction = 0.25;
};

/// Sample points (cell centers at `resolution` per coordinate for step models,
/// depth-`resolution` cell centers for cantor), one copy per unit of
/// multiplicity; P and Q from the low/high eigenvectors of the grid Laplacian
/// of each copy layer.
ScaleProblem realize(const MultiplicityModel& model, int resolution, const CutRule& cut = {});

/// Exchange the first two coordinates.
MultiplicityModel swapped(const MultiplicityModel& model);

struct RatioModel {
  MultiplicityModel model;
  /// One spec per coordinate (or one broadcast); empty selects lorentz_p1 with p = n.
  std::vector<NormSpec> specs;
  /// Exponent in estimate^power / integral; 0 selects n.
  double power = 0.0;
};

struct RatioRow {
  std::string name;
  double integral = 0.0;
  SweepReport sweep;
  double estimate = 0.0;
  double ratio = 0.0;
  bool flagged = false;
};

struct RatioReport {
  std::vector<RatioRow> rows;
  double mean = 0.0;
  double cv = 0.0;  // over unflagged rows
  std::string label = "SOFT";
};

RatioReport ratio_experiment(const std::vector<RatioModel>& models, const std::vector<int>& resolutions,
                             const SolveOptions& opts, const CutRule& cut = {},
                             Extrapolation method = Extrapolation::power_fit);

struct HybridRow {
  std::vector<double> exponents;
  SweepReport sweep;
  double estimate = 0.0;
  /// Same exponents reversed on the coordinate-swapped model (n = 2).
  double swapped_estimate = 0.0;
  double symmetric_gap = 0.0;
};

struct HybridReport {
  std::vector<HybridRow> rows;
};

/// Each exponent set needs sum 1/p_j = 1 within 1e-12 and every p_j > 1.
HybridReport hybrid_exponent_scan(const MultiplicityModel& model, const std::vector<std::vector<double>>& exponent_sets,
                                  const std::vector<int>& resolutions, const SolveOptions& opts, const CutRule& cut = {},
                                  Extrapolation method = Extrapolation::power_fit);

}  // namespace qcmod
