#include "qcmod/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qcmod/errors.hpp"

namespace qcmod {

void TimeFreqModel::validate() const {
  if (N < 2) throw ValidationError("time-frequency model: N must be >= 2");
  if (M < 0 || M >= K || K >= N)
    throw ValidationError("time-frequency model: need 0 <= M < K < N, got M=" + std::to_string(M) +
                          " K=" + std::to_string(K) + " N=" + std::to_string(N));
}

namespace {

// orthonormal real trigonometric basis of R^N: 1, cos 1, sin 1, cos 2, ...
RMat trig_basis(int N) {
  RMat B(N, N);
  int col = 0;
  B.col(col++).setConstant(1.0 / std::sqrt(static_cast<double>(N)));
  for (int k = 1; col < N; ++k) {
    const bool nyquist = 2 * k == N;
    const double s = nyquist ? 1.0 / std::sqrt(static_cast<double>(N)) : std::sqrt(2.0 / N);
    for (int j = 0; j < N; ++j) B(j, col) = s * std::cos(2.0 * std::numbers::pi * k * j / N);
    ++col;
    if (nyquist || col >= N) continue;
    for (int j = 0; j < N; ++j) B(j, col) = s * std::sin(2.0 * std::numbers::pi * k * j / N);
    ++col;
  }
  return B;
}

Mat span_projection(const RMat& B, int from, int to) {
  const RMat V = B.middleCols(from, to - from);
  return (V * V.transpose()).cast<cplx>();
}

int odd_up(int v) { return v | 1; }

}  // namespace

ScaleProblem tf_condenser(const TimeFreqModel& model) {
  model.validate();
  const int N = model.N;
  RMat X = RMat::Zero(N, N);
  for (int j = 0; j < N; ++j) X(j, j) = static_cast<double>(j) / N;
  const RMat B = trig_basis(N);
  ScaleProblem sp;
  sp.scale = N;
  sp.tau = OperatorTuple({X.cast<cplx>()}, {true});
  sp.condenser = Condenser::make(N, span_projection(B, 0, model.M), span_projection(B, model.K, N));
  return sp;
}

std::vector<TimeFreqModel> default_gamma1_schedule(const std::vector<int>& N_list) {
  std::vector<TimeFreqModel> out;
  for (int N : N_list) {
    TimeFreqModel m;
    m.N = N;
    m.M = odd_up(static_cast<int>(std::ceil(std::sqrt(static_cast<double>(N)))));
    m.K = odd_up(N / 4);
    m.validate();
    out.push_back(m);
  }
  return out;
}

Gamma1Report gamma1_experiment(const std::vector<TimeFreqModel>& schedule, const SolveOptions& opts,
                               Extrapolation method) {
  if (schedule.empty()) throw ValidationError("gamma1_experiment: empty schedule");
  for (const auto& m : schedule) m.validate();
  Gamma1Report rep;
  rep.reference = 1.0 / std::numbers::pi;
  const NormSpec trace = NormSpec::schatten(1.0);
  rep.sweep = scale_sweep([&](int i) { return tf_condenser(schedule[static_cast<std::size_t>(i)]); },
                          static_cast<int>(schedule.size()), std::span<const NormSpec>(&trace, 1), opts, method);
  const auto& v = rep.sweep.values;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1] - 2.0 * opts.tol * std::max(1.0, v[i - 1])) rep.monotone = false;
  if (rep.sweep.extrapolation.available) {
    rep.estimate = rep.sweep.extrapolation.limit;
    if (!rep.sweep.extrapolation.note.empty()) rep.notes.push_back(rep.sweep.extrapolation.note);
  } else {
    rep.estimate = v.back();
    rep.notes.push_back("extrapolation unavailable (" + rep.sweep.extrapolation.note + "); using the last value");
  }
  rep.ratio = rep.estimate / rep.reference;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!rep.sweep.converged[i]) rep.notes.push_back("N=" + std::to_string(schedule[i].N) + ": not converged");
  if (!rep.monotone) rep.notes.push_back("values not monotone along the schedule");
  return rep;
}

void MultiplicityModel::validate() const {
  if (n < 1) throw ValidationError("multiplicity model: n must be >= 1");
  if (kind == Kind::step) {
    if (static_cast<int>(cells.size()) != n) throw ValidationError("multiplicity model: cells needs n entries");
    long long total = 1;
    for (int c : cells) {
      if (c < 1) throw ValidationError("multiplicity model: cell counts must be >= 1");
      total *= c;
    }
    if (static_cast<long long>(multiplicity.size()) != total)
      throw ValidationError("multiplicity model: multiplicity needs " + std::to_string(total) + " entries");
    for (int m : multiplicity)
      if (m < 0) throw ValidationError("multiplicity model: multiplicities must be >= 0");
  } else {
    if (pieces < 2) throw ValidationError("multiplicity model: cantor pieces must be >= 2");
    if (!(ratio > 0.0) || ratio * pieces > 1.0)
      throw ValidationError("multiplicity model: cantor ratio must satisfy 0 < r <= 1/pieces");
  }
}

double MultiplicityModel::integral() const {
  validate();
  if (kind == Kind::cantor) return 1.0;
  double vol = 1.0;
  for (int c : cells) vol /= c;
  double s = 0.0;
  for (int m : multiplicity) s += m * vol;
  return s;
}

MultiplicityModel swapped(const MultiplicityModel& model) {
  model.validate();
  MultiplicityModel out = model;
  if (model.n < 2) return out;
  out.name = model.name + "-swapped";
  if (model.kind == MultiplicityModel::Kind::cantor) return out;
  std::swap(out.cells[0], out.cells[1]);
  const int n = model.n;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const std::size_t total = model.multiplicity.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    // idx is the multi-index of `flat` in the original grid
    std::vector<int> sw = idx;
    std::swap(sw[0], sw[1]);
    std::size_t t = 0;
    for (int k = 0; k < n; ++k) t = t * static_cast<std::size_t>(out.cells[static_cast<std::size_t>(k)]) + static_cast<std::size_t>(sw[static_cast<std::size_t>(k)]);
    out.multiplicity[t] = model.multiplicity[flat];
    for (int k = n - 1; k >= 0; --k) {
      if (++idx[static_cast<std::size_t>(k)] < model.cells[static_cast<std::size_t>(k)]) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return out;
}

namespace {

std::vector<double> cantor_centers(int pieces, double r, int depth) {
  std::vector<double> starts{0.0};
  double len = 1.0;
  for (int l = 0; l < depth; ++l) {
    std::vector<double> next;
    const double gap = (1.0 - pieces * r) / (pieces - 1);
    for (double a : starts)
      for (int t = 0; t < pieces; ++t) next.push_back(a + len * t * (r + gap));
    starts = std::move(next);
    len *= r;
  }
  for (double& a : starts) a += 0.5 * len;
  return starts;
}

int extend_cluster(const Vec& ev, int cut) {
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  while (cut > 0 && cut < ev.size() && ev(cut) - ev(cut - 1) <= 1e-9 * scale) ++cut;
  return cut;
}

}  // namespace

ScaleProblem realize(const MultiplicityModel& model, int resolution, const CutRule& cut) {
  model.validate();
  if (resolution < 1) throw ValidationError("realize: resolution must be >= 1");
  const int n = model.n;
  std::vector<double> axis;
  if (model.kind == MultiplicityModel::Kind::step) {
    for (int i = 0; i < resolution; ++i) axis.push_back((i + 0.5) / resolution);
  } else {
    axis = cantor_centers(model.pieces, model.ratio, resolution);
  }
  const int per = static_cast<int>(axis.size());
  long long count = 1;
  for (int k = 0; k < n; ++k) count *= per;
  if (count > 4096) throw ValidationError("realize: grid too large (" + std::to_string(count) + " points)");

  // multiplicity of each grid point
  std::vector<int> mult(static_cast<std::size_t>(count), 1);
  std::vector<std::vector<int>> multi(static_cast<std::size_t>(count), std::vector<int>(static_cast<std::size_t>(n)));
  for (long long f = 0; f < count; ++f) {
    long long rest = f;
    for (int k = n - 1; k >= 0; --k) {
      multi[static_cast<std::size_t>(f)][static_cast<std::size_t>(k)] = static_cast<int>(rest % per);
      rest /= per;
    }
    if (model.kind == MultiplicityModel::Kind::step) {
      std::size_t cell = 0;
      for (int k = 0; k < n; ++k) {
        const double s = axis[static_cast<std::size_t>(multi[static_cast<std::size_t>(f)][static_cast<std::size_t>(k)])];
        const int ck = std::min(model.cells[static_cast<std::size_t>(k)] - 1,
                                static_cast<int>(std::floor(s * model.cells[static_cast<std::size_t>(k)])));
        cell = cell * static_cast<std::size_t>(model.cells[static_cast<std::size_t>(k)]) + static_cast<std::size_t>(ck);
      }
      mult[static_cast<std::size_t>(f)] = model.multiplicity[cell];
    }
  }
  const int layers = *std::max_element(mult.begin(), mult.end());

  struct Layer {
    std::vector<long long> points;
    RMat V;
    int M = 0, K = 0;
  };
  std::vector<Layer> L;
  int D = 0;
  for (int l = 1; l <= layers; ++l) {
    Layer ly;
    std::vector<int> local(static_cast<std::size_t>(count), -1);
    for (long long f = 0; f < count; ++f)
      if (mult[static_cast<std::size_t>(f)] >= l) {
        local[static_cast<std::size_t>(f)] = static_cast<int>(ly.points.size());
        ly.points.push_back(f);
      }
    const int m = static_cast<int>(ly.points.size());
    RMat Lap = RMat::Zero(m, m);
    for (int a = 0; a < m; ++a) {
      const auto& mi = multi[static_cast<std::size_t>(ly.points[static_cast<std::size_t>(a)])];
      for (int k = 0; k < n; ++k) {
        if (per < 2) continue;
        std::vector<int> nb = mi;
        nb[static_cast<std::size_t>(k)] = (nb[static_cast<std::size_t>(k)] + 1) % per;
        long long f = 0;
        for (int q = 0; q < n; ++q) f = f * per + nb[static_cast<std::size_t>(q)];
        const int b = local[static_cast<std::size_t>(f)];
        if (b < 0 || b == a) continue;
        Lap(a, a) += 1;
        Lap(b, b) += 1;
        Lap(a, b) -= 1;
        Lap(b, a) -= 1;
      }
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(Lap);
    ly.V = es.eigenvectors();
    ly.M = std::min(m, static_cast<int>(std::ceil(std::pow(static_cast<double>(m), cut.m_exponent))));
    ly.K = std::min(m, static_cast<int>(std::ceil(cut.k_fraction * m)));
    ly.M = extend_cluster(es.eigenvalues(), ly.M);
    // keep a nonempty middle whenever the layer has room for one
    ly.K = std::min(m, extend_cluster(es.eigenvalues(), std::max(ly.K, ly.M + 1)));
    D += m;
    L.push_back(std::move(ly));
  }

  std::vector<Mat> comps(static_cast<std::size_t>(n), Mat::Zero(D, D));
  Mat P = Mat::Zero(D, D), Q = Mat::Zero(D, D);
  int off = 0;
  for (const Layer& ly : L) {
    const int m = static_cast<int>(ly.points.size());
    for (int a = 0; a < m; ++a)
      for (int k = 0; k < n; ++k)
        comps[static_cast<std::size_t>(k)](off + a, off + a) =
            axis[static_cast<std::size_t>(multi[static_cast<std::size_t>(ly.points[static_cast<std::size_t>(a)])][static_cast<std::size_t>(k)])];
    P.block(off, off, m, m) = span_projection(ly.V, 0, ly.M);
    Q.block(off, off, m, m) = span_projection(ly.V, ly.K, m);
    off += m;
  }
  ScaleProblem sp;
  sp.scale = per;
  sp.tau = OperatorTuple(std::move(comps), std::vector<bool>(static_cast<std::size_t>(n), true));
  sp.condenser = Condenser::make(D, P, Q);
  return sp;
}

namespace {

SweepReport sweep_model(const MultiplicityModel& model, const std::vector<int>& resolutions,
                        const std::vector<NormSpec>& specs, const SolveOptions& opts, const CutRule& cut,
                        Extrapolation method) {
  std::vector<ScaleProblem> problems;
  for (int r : resolutions) problems.push_back(realize(model, r, cut));
  return scale_sweep([&](int i) { return problems[static_cast<std::size_t>(i)]; }, static_cast<int>(problems.size()),
                     specs, opts, method);
}

double estimate_of(const SweepReport& s) {
  return s.extrapolation.available ? s.extrapolation.limit : s.values.back();
}

}  // namespace

RatioReport ratio_experiment(const std::vector<RatioModel>& models, const std::vector<int>& resolutions,
                             const SolveOptions& opts, const CutRule& cut, Extrapolation method) {
  if (models.size() < 2) throw ValidationError("ratio_experiment: need at least 2 models");
  if (resolutions.empty()) throw ValidationError("ratio_experiment: need at least one resolution");
  RatioReport rep;
  for (const RatioModel& rm : models) {
    rm.model.validate();
    RatioRow row;
    row.name = rm.model.name;
    row.integral = rm.model.integral();
    std::vector<NormSpec> specs = rm.specs;
    if (specs.empty()) specs.push_back(NormSpec::lorentz(static_cast<double>(rm.model.n)));
    const double power = rm.power > 0 ? rm.power : static_cast<double>(rm.model.n);
    row.sweep = sweep_model(rm.model, resolutions, specs, opts, cut, method);
    row.estimate = estimate_of(row.sweep);
    row.ratio = row.integral > 0 ? std::pow(std::max(row.estimate, 0.0), power) / row.integral : 0.0;
    row.flagged = row.integral <= 0 || !std::isfinite(row.ratio);
    for (bool c : row.sweep.converged) row.flagged = row.flagged || !c;
    rep.rows.push_back(std::move(row));
  }
  std::vector<double> r;
  for (const RatioRow& row : rep.rows)
    if (!row.flagged) r.push_back(row.ratio);
  if (!r.empty()) {
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= static_cast<double>(r.size());
    rep.mean = mean;
    rep.cv = mean != 0.0 ? std::sqrt(var) / std::abs(mean) : 0.0;
  }
  return rep;
}

HybridReport hybrid_exponent_scan(const MultiplicityModel& model, const std::vector<std::vector<double>>& exponent_sets,
                                  const std::vector<int>& resolutions, const SolveOptions& opts, const CutRule& cut,
                                  Extrapolation method) {
  model.validate();
  for (const auto& set : exponent_sets) {
    if (static_cast<int>(set.size()) != model.n)
      throw ValidationError("hybrid_exponent_scan: exponent set must have n = " + std::to_string(model.n) + " entries");
    double s = 0.0;
    for (double p : set) {
      if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("hybrid_exponent_scan: exponents must be finite and > 1");
      s += 1.0 / p;
    }
    if (std::abs(s - 1.0) > 1e-12) throw ValidationError("hybrid_exponent_scan: sum of 1/p_j must equal 1");
  }
  HybridReport rep;
  const MultiplicityModel sw = swapped(model);
  for (const auto& set : exponent_sets) {
    HybridRow row;
    row.exponents = set;
    std::vector<NormSpec> specs;
    for (double p : set) specs.push_back(NormSpec::lorentz(p));
    row.sweep = sweep_model(model, resolutions, specs, opts, cut, method);
    row.estimate = estimate_of(row.sweep);
    if (model.n == 2) {
      std::vector<NormSpec> rev(specs.rbegin(), specs.rend());
      row.swapped_estimate = estimate_of(sweep_model(sw, resolutions, rev, opts, cut, method));
    } else {
      row.swapped_estimate = row.estimate;
    }
    row.symmetric_gap = std::abs(row.estimate - row.swapped_estimate);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace qcmod
