#include "qcmod/condenser_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "qcmod/ellipsoid.hpp"
#include "qcmod/errors.hpp"

namespace qcmod {

std::string to_string(StepRule r) { return r == StepRule::diminishing ? "diminishing" : "polyak_with_estimate"; }

StepRule step_rule_from_string(const std::string& s) {
  if (s == "diminishing") return StepRule::diminishing;
  if (s == "polyak_with_estimate" || s == "polyak") return StepRule::polyak_with_estimate;
  throw ValidationError("unknown step rule '" + s + "' (allowed: diminishing, polyak_with_estimate)");
}

void SolveOptions::validate() const {
  if (max_iters < 1) throw ValidationError("options: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("options: tol must be > 0");
  if (restarts < 1) throw ValidationError("options: restarts must be >= 1");
  if (polish_max_iters < 0) throw ValidationError("options: polish_max_iters must be >= 0");
}

namespace {

using Clock = std::chrono::steady_clock;

// F(B) = max_j |[P + W B W^*, T_j]|_{J_j} and one subgradient in the middle block.
class MiddleObjective {
 public:
  MiddleObjective(const OperatorTuple& tau, const Condenser& c, std::span<const NormSpec> specs)
      : tau_(tau), specs_(specs), W_(c.middle_basis()), P_(c.P()), real_(tau.real() && c.real()) {
    if (specs.size() != 1 && specs.size() != static_cast<std::size_t>(tau.size()))
      throw ValidationError("solve_condenser: expected 1 or " + std::to_string(tau.size()) + " norm specs");
    if (tau.dim() != c.dim()) throw ValidationError("solve_condenser: tuple and condenser dimensions differ");
    for (const NormSpec& s : specs) s.validate();
  }

  bool real() const { return real_; }

  Mat embed(const Mat& B) const { return hermitian_part(P_ + W_ * B * W_.adjoint()); }

  double value(const Mat& B, Mat* grad) const {
    const Mat A = embed(B);
    double best = -1.0;
    int arg = 0;
    Mat Carg;
    for (int j = 0; j < tau_.size(); ++j) {
      Mat C = commutator(A, tau_[j]);
      const double v = matrix_norm(C, spec(j), hint(j));
      if (v > best) {
        best = v;
        arg = j;
        Carg = std::move(C);
      }
    }
    if (grad) {
      // d/dA |A T - T A| = G T^* - T^* G
      const Mat G = norm_subgradient(Carg, spec(arg), hint(arg));
      const Mat& T = tau_[arg];
      Mat S = hermitian_part(W_.adjoint() * (G * T.adjoint() - T.adjoint() * G) * W_);
      if (real_) S = S.real().cast<cplx>();
      *grad = std::move(S);
    }
    return best;
  }

 private:
  const NormSpec& spec(int j) const { return specs_.size() == 1 ? specs_[0] : specs_[j]; }
  MatrixHint hint(int j) const { return tau_.selfadjoint(j) ? MatrixHint::skew_hermitian : MatrixHint::general; }

  const OperatorTuple& tau_;
  std::span<const NormSpec> specs_;
  Mat W_, P_;
  bool real_;
};

struct StartResult {
  Mat best;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  std::vector<double> steps;
  bool stalled = false;
  int iters = 0;
};

StartResult run_start(const MiddleObjective& F, Mat B, const SolveOptions& opts, double radius) {
  StartResult r;
  Mat S;
  double f = F.value(B, &S);
  r.best = B;
  r.best_value = f;
  r.history.push_back(f);
  r.steps.push_back(0.0);
  const double a = opts.step_scale > 0 ? opts.step_scale : 0.5 * radius;
  // Polyak level control
  double delta = std::max(f, 1e-300) * 0.5;
  int since_progress = 0;
  double level_ref = f;
  std::vector<double> best_trace{f};
  for (int k = 0; k < opts.max_iters; ++k) {
    const double gnorm = S.norm();
    if (!(gnorm > 0.0)) {
      r.stalled = true;  // zero subgradient: optimal
      break;
    }
    double alpha;
    if (opts.step_rule == StepRule::diminishing) {
      alpha = a / std::sqrt(static_cast<double>(k) + 1.0) / gnorm;
    } else {
      const double target = opts.target ? *opts.target : r.best_value - delta;
      alpha = std::max(f - target, 0.0) / (gnorm * gnorm);
      if (alpha == 0.0) alpha = a / std::sqrt(static_cast<double>(k) + 1.0) / gnorm;
    }
    B = project_middle(B - alpha * S);
    if (F.real()) B = B.real().cast<cplx>();
    f = F.value(B, &S);
    r.history.push_back(f);
    r.steps.push_back(alpha * gnorm);
    r.iters = k + 1;
    if (f < r.best_value) {
      r.best_value = f;
      r.best = B;
    }
    if (opts.step_rule == StepRule::polyak_with_estimate && !opts.target) {
      if (r.best_value <= level_ref - 0.5 * delta) {
        level_ref = r.best_value;
        since_progress = 0;
      } else if (++since_progress >= 50) {
        delta *= 0.5;
        since_progress = 0;
        level_ref = r.best_value;
      }
    }
    best_trace.push_back(r.best_value);
    // stall: best value moved by less than tol (relative) over the last quarter of the run
    const int window = std::max(200, (k + 1) / 4);
    if (k + 1 >= 2 * window) {
      const double old = best_trace[best_trace.size() - 1 - window];
      if (old - r.best_value <= opts.tol * std::max(r.best_value, 1e-300)) {
        r.stalled = true;
        break;
      }
    }
  }
  return r;
}

}  // namespace

SolveReport solve_condenser(const OperatorTuple& tau, const Condenser& c, std::span<const NormSpec> specs,
                            const SolveOptions& opts) {
  opts.validate();
  const auto t0 = Clock::now();
  const MiddleObjective F(tau, c, specs);
  const int m0 = c.middle_dim();
  SolveReport rep;

  if (m0 == 0) {
    rep.value_upper = F.value(Mat(0, 0), nullptr);
    rep.value_lower = rep.value_upper;
    rep.minimizer_middle = Mat(0, 0);
    rep.minimizer = c.P();
    rep.history = {rep.value_upper};
    rep.steps = {0.0};
    rep.restart_values = {rep.value_upper};
    rep.converged = true;
    rep.method = "single_point";
    rep.residuals = feasibility(c, rep.minimizer);
    rep.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return rep;
  }

  const bool real = F.real();
  std::vector<Mat> starts;
  for (const Mat& w : opts.warm_starts) {
    if (w.rows() != m0 || w.cols() != m0) throw ValidationError("solve_condenser: warm start has wrong shape");
    Mat B = project_middle(w);
    if (real) B = B.real().cast<cplx>();
    starts.push_back(B);
  }
  starts.push_back(Mat::Identity(m0, m0) * 0.5);
  for (int r = 1; r < opts.restarts; ++r) {
    std::mt19937_64 rng(mix_seed(opts.seed, static_cast<std::uint64_t>(r)));
    starts.push_back(random_contraction(m0, rng, real));
  }

  const double radius = 0.5 * std::sqrt(static_cast<double>(m0));
  std::vector<StartResult> results(starts.size());
  const int ns = static_cast<int>(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < ns; ++i) results[i] = run_start(F, starts[i], opts, radius);

  int best = 0;
  for (int i = 0; i < ns; ++i) {
    rep.restart_values.push_back(results[i].best_value);
    if (results[i].best_value < results[best].best_value) best = i;
  }
  StartResult& win = results[best];
  rep.best_restart = best;
  rep.history = win.history;
  rep.steps = win.steps;
  rep.iters = win.iters;
  Mat Bbest = win.best;
  double fbest = win.best_value;
  bool stalled = win.stalled;
  rep.method = "projected_subgradient/" + to_string(opts.step_rule);

  const HermitianCoords coords(m0, real);
  if (coords.size() <= opts.polish_max_params && opts.polish_max_iters > 0) {
    const double f_half = F.value(Mat::Identity(m0, m0) * 0.5, nullptr);
    const double abs_tol = opts.tol * std::max(fbest, 1e-6 * f_half);
    auto oracle = [&](const Vec& x) {
      const Mat B = coords.from_vec(x);
      Eigen::SelfAdjointEigenSolver<Mat> es(B);
      const Vec& ev = es.eigenvalues();
      CutOracle o;
      if (ev(0) < 0.0) {
        const CVec v = es.eigenvectors().col(0);
        o.feasible = false;
        o.value = -ev(0);
        o.grad = -coords.to_vec(v * v.adjoint());
      } else if (ev(m0 - 1) > 1.0) {
        const CVec v = es.eigenvectors().col(m0 - 1);
        o.feasible = false;
        o.value = ev(m0 - 1) - 1.0;
        o.grad = coords.to_vec(v * v.adjoint());
      } else {
        Mat S;
        o.value = F.value(B, &S);
        o.grad = coords.to_vec(S);
      }
      return o;
    };
    const Vec center = coords.to_vec(Mat::Identity(m0, m0) * 0.5);
    const EllipsoidResult er = ellipsoid_minimize(oracle, center, radius * (1.0 + 1e-9), opts.polish_max_iters, abs_tol,
                                                  std::make_pair(coords.to_vec(Bbest), fbest));
    for (double h : er.history) {
      rep.history.push_back(h);
      rep.steps.push_back(0.0);
    }
    rep.iters += er.iters;
    if (er.best_f < fbest) {
      fbest = er.best_f;
      Bbest = coords.from_vec(er.best_x);
    }
    if (er.certified) {
      rep.value_lower = std::min(er.lower, fbest);
      stalled = stalled || (fbest - *rep.value_lower <= abs_tol);
    }
    rep.method += "+ellipsoid";
  }

  rep.minimizer_middle = Bbest;
  rep.minimizer = F.embed(Bbest);
  rep.value_upper = F.value(Bbest, nullptr);
  rep.converged = stalled;
  rep.residuals = feasibility(c, rep.minimizer);
  rep.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

ScanReport sup_over_projections(const OperatorTuple& tau, const std::vector<ProjectionSource>& P_family,
                                const ProjectionSource& Q, std::span<const NormSpec> specs, const SolveOptions& opts) {
  ScanReport scan;
  const int n = static_cast<int>(P_family.size());
  std::vector<Condenser> conds;
  conds.reserve(P_family.size());
  for (const ProjectionSource& P : P_family) conds.push_back(Condenser::make(tau.dim(), P, Q));
  scan.entries.resize(P_family.size());
  for (int i = 0; i < n; ++i) scan.entries[i] = solve_condenser(tau, conds[i], specs, opts);
  scan.nested_monotone.assign(P_family.size(), true);
  double scale = 0.0;
  for (const SolveReport& r : scan.entries) {
    scan.sup = std::max(scan.sup, r.value_upper);
    scale = std::max(scale, r.value_upper);
  }
  for (int i = 1; i < n; ++i) {
    const Mat& Pprev = conds[static_cast<std::size_t>(i - 1)].P();
    const Mat& Pcur = conds[i].P();
    const bool nested = (Pcur * Pprev - Pprev).norm() <= 1e-10;
    if (nested && scan.entries[static_cast<std::size_t>(i - 1)].value_upper >
                      scan.entries[i].value_upper + 2.0 * opts.tol * std::max(scale, 1.0)) {
      scan.nested_monotone[i] = false;
      scan.monotone = false;
    }
  }
  return scan;
}

SweepReport scale_sweep(const std::function<ScaleProblem(int)>& generator, int count, std::span<const NormSpec> specs,
                        const SolveOptions& opts, Extrapolation method) {
  if (count < 1) throw ValidationError("scale_sweep: count must be >= 1");
  SweepReport sw;
  sw.scales.resize(count);
  sw.values.resize(count);
  sw.converged.resize(count);
  sw.reports.resize(count);
  std::vector<ScaleProblem> problems;
  problems.reserve(count);
  for (int i = 0; i < count; ++i) problems.push_back(generator(i));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    const ScaleProblem& pr = problems[i];
    SolveOptions o = opts;
    o.seed = mix_seed(opts.seed, static_cast<std::uint64_t>(1000 + i));
    sw.reports[i] = solve_condenser(pr.tau, pr.condenser, specs, o);
  }
  for (int i = 0; i < count; ++i) {
    sw.scales[i] = problems[i].scale;
    sw.values[i] = sw.reports[i].value_upper;
    sw.converged[i] = sw.reports[i].converged;
  }
  sw.extrapolation = extrapolate(sw.scales, sw.values, method);
  return sw;
}

}  // namespace qcmod
