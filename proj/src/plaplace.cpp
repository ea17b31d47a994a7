#include "qcmod/plaplace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "qcmod/errors.hpp"

namespace qcmod {

using Clock = std::chrono::steady_clock;

void SmoothProblem::validate() const {
  if (!std::isfinite(p) || p < 2.0) throw ValidationError("plaplace: p must satisfy 2 <= p < inf");
  if (tau.size() == 0) throw ValidationError("plaplace: empty operator tuple");
  if (!tau.all_selfadjoint()) throw ValidationError("plaplace: all tuple components must be selfadjoint");
  if (tau.dim() != condenser.dim()) throw ValidationError("plaplace: tuple and condenser dimensions differ");
}

namespace {

Mat s_operator(const OperatorTuple& tau, const Mat& A, std::vector<Mat>* C) {
  Mat S = Mat::Zero(A.rows(), A.cols());
  for (int j = 0; j < tau.size(); ++j) {
    Mat Cj = commutator(A, tau[j]);
    S -= Cj * Cj;
    if (C) C->push_back(std::move(Cj));
  }
  return hermitian_part(S);
}

Mat theta_matrix(const SmoothProblem& prob, const Mat& X) {
  std::vector<Mat> C;
  const Mat S = s_operator(prob.tau, X, &C);
  const double e = 0.5 * prob.p - 1.0;
  Mat G;
  if (e == 0.0) {
    G = Mat::Identity(X.rows(), X.cols());
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    if (es.info() != Eigen::Success)
      throw NumericError("theta: eigendecomposition of S failed (||S||_F = " + std::to_string(S.norm()) + ")");
    Vec ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = ev(i) > 0.0 ? std::pow(ev(i), e) : 0.0;
    G = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  }
  Mat Th = Mat::Zero(X.rows(), X.cols());
  for (int k = 0; k < prob.tau.size(); ++k) Th += commutator(prob.tau[k], C[k] * G + G * C[k]);
  return hermitian_part(Th);
}

class SmoothMiddle {
 public:
  explicit SmoothMiddle(const SmoothProblem& prob)
      : prob_(prob), W_(prob.condenser.middle_basis()), P_(prob.condenser.P()),
        real_(prob.tau.real() && prob.condenser.real()) {}

  bool real() const { return real_; }
  Mat embed(const Mat& B) const { return hermitian_part(P_ + W_ * B * W_.adjoint()); }

  double value(const Mat& B) const { return smooth_objective(prob_, embed(B)); }

  // value, middle-block gradient and (p/2)||Theta||_op
  double value_grad(const Mat& B, Mat& grad, double* gscale) const {
    const Mat X = embed(B);
    const Mat Th = theta_matrix(prob_, X);
    grad = hermitian_part(W_.adjoint() * (-0.5 * prob_.p) * Th * W_);
    if (real_) grad = grad.real().cast<cplx>();
    if (gscale) *gscale = 0.5 * prob_.p * opnorm(Th);
    return smooth_objective(prob_, X);
  }

  Mat grad(const Mat& B) const {
    Mat g;
    value_grad(B, g, nullptr);
    return g;
  }

  Mat project(const Mat& B) const {
    Mat out = project_middle(B);
    if (real_) out = out.real().cast<cplx>();
    return out;
  }

 private:
  const SmoothProblem& prob_;
  Mat W_, P_;
  bool real_;
};

double inner(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace().real(); }

// curvature estimate by power iteration on finite-difference Hessian products
double curvature(const SmoothMiddle& F, const Mat& B, std::mt19937_64& rng) {
  const int m = static_cast<int>(B.rows());
  Mat V = random_hermitian(m, rng, F.real());
  double L = 0.0;
  const double h = 1e-4;
  for (int it = 0; it < 10; ++it) {
    const double nv = V.norm();
    if (!(nv > 0)) break;
    V /= nv;
    const Mat HV = (F.grad(B + h * V) - F.grad(B - h * V)) / (2 * h);
    L = HV.norm();
    if (!(L > 0)) break;
    V = HV;
  }
  return std::max(L, 1e-12);
}

struct SmoothStart {
  Mat best;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> history, steps;
  bool converged = false;
  int iters = 0;
};

SmoothStart descend(const SmoothMiddle& F, Mat B, const SolveOptions& opts, std::uint64_t seed) {
  SmoothStart r;
  B = F.project(B);
  Mat g;
  double gscale = 0.0;
  double f = F.value_grad(B, g, &gscale);
  r.history.push_back(f);
  r.steps.push_back(0.0);
  r.best = B;
  r.best_value = f;
  std::mt19937_64 rng(seed);
  double t = 1.0 / curvature(F, B, rng);
  for (int k = 0; k < opts.max_iters; ++k) {
    if (f == 0.0) {
      r.converged = true;
      break;
    }
    Mat Bn, D;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Bn = F.project(B - t * g);
      D = Bn - B;
      fn = F.value(Bn);
      if (fn <= f + inner(g, D) + 0.5 / t * D.squaredNorm() + 1e-15 * std::abs(f)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    const double gm = D.norm() / t;
    if (!accepted || D.norm() == 0.0) {
      r.converged = gm <= 0.1 * opts.tol * std::max(gscale, 1e-300) || D.norm() == 0.0;
      break;
    }
    B = Bn;
    f = F.value_grad(B, g, &gscale);
    r.history.push_back(f);
    r.steps.push_back(t);
    r.iters = k + 1;
    if (f <= r.best_value) {
      r.best_value = f;
      r.best = B;
    }
    if (gm <= 0.1 * opts.tol * std::max(gscale, 1e-300)) {
      r.converged = true;
      break;
    }
    t *= 1.5;
  }
  return r;
}

SolveReport single_point(const SmoothProblem& prob, const SmoothMiddle& F) {
  SolveReport rep;
  rep.minimizer_middle = Mat(0, 0);
  rep.minimizer = F.embed(rep.minimizer_middle);
  rep.value_upper = smooth_objective(prob, rep.minimizer);
  rep.value_lower = rep.value_upper;
  rep.history = {rep.value_upper};
  rep.steps = {0.0};
  rep.restart_values = {rep.value_upper};
  rep.converged = true;
  rep.method = "single_point";
  rep.residuals = feasibility(prob.condenser, rep.minimizer);
  return rep;
}

SolveReport assemble_report(const SmoothProblem& prob, const SmoothMiddle& F, std::vector<SmoothStart>& results) {
  SolveReport rep;
  std::size_t best = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    rep.restart_values.push_back(results[i].best_value);
    if (results[i].best_value < results[best].best_value) best = i;
  }
  SmoothStart& w = results[best];
  rep.best_restart = static_cast<int>(best);
  rep.history = std::move(w.history);
  rep.steps = std::move(w.steps);
  rep.iters = w.iters;
  rep.converged = w.converged;
  rep.minimizer_middle = w.best;
  rep.minimizer = F.embed(w.best);
  rep.value_upper = smooth_objective(prob, rep.minimizer);
  rep.method = "projected_gradient/armijo";
  rep.residuals = feasibility(prob.condenser, rep.minimizer);
  return rep;
}

}  // namespace

double smooth_objective(const SmoothProblem& prob, const Mat& A) {
  const Mat S = s_operator(prob.tau, A, nullptr);
  if (prob.p == 2.0) return std::max(S.trace().real(), 0.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("smooth_objective: eigendecomposition failed");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double l = es.eigenvalues()(i);
    if (l > 0.0) acc += std::pow(l, 0.5 * prob.p);
  }
  return acc;
}

ThetaReport theta(const SmoothProblem& prob, const Mat& X) {
  prob.validate();
  if (X.rows() != prob.tau.dim() || X.cols() != prob.tau.dim()) throw ValidationError("theta: X has wrong shape");
  ThetaReport r;
  r.Theta = theta_matrix(prob, X);
  r.theta_opnorm = opnorm(r.Theta);
  return r;
}

SolveReport minimize_smooth(const SmoothProblem& prob, const SolveOptions& opts) {
  prob.validate();
  opts.validate();
  const auto t0 = Clock::now();
  const SmoothMiddle F(prob);
  const int m0 = prob.condenser.middle_dim();
  if (m0 == 0) {
    SolveReport rep = single_point(prob, F);
    rep.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return rep;
  }
  std::vector<Mat> starts;
  for (const Mat& w : opts.warm_starts) {
    if (w.rows() != m0 || w.cols() != m0) throw ValidationError("minimize_smooth: warm start has wrong shape");
    starts.push_back(w);
  }
  starts.push_back(Mat::Identity(m0, m0) * 0.5);
  for (int r = 1; r < opts.restarts; ++r) {
    std::mt19937_64 rng(mix_seed(opts.seed, static_cast<std::uint64_t>(r)));
    starts.push_back(random_contraction(m0, rng, F.real()));
  }
  const int ns = static_cast<int>(starts.size());
  std::vector<SmoothStart> results(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < ns; ++i)
    results[static_cast<std::size_t>(i)] =
        descend(F, starts[static_cast<std::size_t>(i)], opts, mix_seed(opts.seed, 500 + static_cast<std::uint64_t>(i)));
  SolveReport rep = assemble_report(prob, F, results);
  rep.wall_time = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

namespace {

Mat range_basis_of(const Mat& E) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(E));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > 0.5) keep.push_back(i);
  Mat B(E.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) B.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
  return B;
}

Vec compression_eigs(const Mat& E, const Mat& Th) {
  const Mat B = range_basis_of(E);
  if (B.cols() == 0) return Vec(0);
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(B.adjoint() * Th * B), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

ThetaReport euler_lagrange_report(const SmoothProblem& prob, const Mat& X, const ElTolerances& tol) {
  ThetaReport r = theta(prob, X);
  const int d = prob.tau.dim();
  r.eps1 = tol.eps1;
  r.delta = tol.delta_rel * r.theta_opnorm;

  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(X));
  const Vec& ev = es.eigenvalues();
  r.P1 = Mat::Zero(d, d);
  r.Q1 = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const CVec v = es.eigenvectors().col(i);
    if (ev(i) >= 1.0 - tol.eps1) {
      r.P1 += v * v.adjoint();
      ++r.p1_rank;
    } else if (ev(i) <= tol.eps1) {
      r.Q1 += v * v.adjoint();
      ++r.q1_rank;
    }
    if ((ev(i) > tol.eps1 && ev(i) < 2 * tol.eps1) || (ev(i) > 1 - 2 * tol.eps1 && ev(i) < 1 - tol.eps1))
      r.boundary_ambiguous = true;
  }
  if (r.boundary_ambiguous) r.flags.push_back("boundary-ambiguous");

  const Mat I = Mat::Identity(d, d);
  const Mat& P = prob.condenser.P();
  const Mat& Q = prob.condenser.Q();
  r.xp1_residual = (X * r.P1 - r.P1).norm();
  r.xq1_residual = (X * r.Q1).norm();
  r.p_in_p1 = (r.P1 * P - P).norm();
  r.q_in_q1 = (r.Q1 * Q - Q).norm();
  r.p1q1 = (r.P1 * r.Q1).norm();
  if (r.p_in_p1 > 1e-6 || r.q_in_q1 > 1e-6) r.flags.push_back("plates-not-contained");

  r.first_eigs = compression_eigs(I - P - r.Q1, r.Theta);
  r.second_eigs = compression_eigs(I - r.P1 - Q, r.Theta);
  r.third_eigs = compression_eigs(I - r.P1 - r.Q1, r.Theta);
  r.first_max = r.first_eigs.size() ? r.first_eigs.maxCoeff() : 0.0;
  r.second_min = r.second_eigs.size() ? r.second_eigs.minCoeff() : 0.0;
  r.third_radius = r.third_eigs.size() ? r.third_eigs.cwiseAbs().maxCoeff() : 0.0;
  r.first_ok = r.first_max <= r.delta;
  r.second_ok = r.second_min >= -r.delta;
  r.third_ok = r.third_radius <= r.delta;
  r.conditions_pass = r.first_ok && r.second_ok && r.third_ok;
  const double first_min = r.first_eigs.size() ? r.first_eigs.minCoeff() : 0.0;
  const double second_max = r.second_eigs.size() ? r.second_eigs.maxCoeff() : 0.0;
  r.reversed_conditions_pass = first_min >= -r.delta && second_max <= r.delta && r.third_ok;
  if (!r.first_ok) r.flags.push_back("first-compression-positive");
  if (!r.second_ok) r.flags.push_back("second-compression-negative");
  if (!r.third_ok) r.flags.push_back("third-compression-nonzero");
  return r;
}

UniquenessReport uniqueness_probe(const SmoothProblem& prob, const SolveOptions& opts, int trials) {
  prob.validate();
  opts.validate();
  if (trials < 2) throw ValidationError("uniqueness_probe: trials must be >= 2");
  UniquenessReport u;
  for (int j = 0; j < prob.tau.size(); ++j) u.scale = std::max(u.scale, opnorm(prob.tau[j]));
  const SmoothMiddle F(prob);
  const int m0 = prob.condenser.middle_dim();
  u.values.resize(static_cast<std::size_t>(trials));
  u.converged.resize(static_cast<std::size_t>(trials));
  u.minimizers.resize(static_cast<std::size_t>(trials));
  std::vector<SmoothStart> runs(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(mix_seed(opts.seed, 3000 + static_cast<std::uint64_t>(t)));
    const Mat B0 = m0 > 0 ? random_contraction(m0, rng, F.real()) : Mat(0, 0);
    runs[static_cast<std::size_t>(t)] =
        m0 > 0 ? descend(F, B0, opts, mix_seed(opts.seed, 4000 + static_cast<std::uint64_t>(t))) : SmoothStart{};
  }
  for (int t = 0; t < trials; ++t) {
    const auto ti = static_cast<std::size_t>(t);
    const Mat B = m0 > 0 ? runs[ti].best : Mat(0, 0);
    u.minimizers[ti] = F.embed(B);
    u.values[ti] = smooth_objective(prob, u.minimizers[ti]);
    u.converged[ti] = m0 == 0 || runs[ti].converged;
    if (!u.converged[ti]) u.excluded.push_back(t);
  }
  for (int a = 0; a < trials; ++a) {
    for (int b = a + 1; b < trials; ++b) {
      if (!u.converged[static_cast<std::size_t>(a)] || !u.converged[static_cast<std::size_t>(b)]) continue;
      const Mat& Xa = u.minimizers[static_cast<std::size_t>(a)];
      const Mat& Xb = u.minimizers[static_cast<std::size_t>(b)];
      PairDistance pd{a, b, 0.0, (Xa - Xb).norm()};
      for (int j = 0; j < prob.tau.size(); ++j)
        pd.commutator_distance = std::max(pd.commutator_distance, commutator(Xa - Xb, prob.tau[j]).norm());
      u.max_commutator_distance = std::max(u.max_commutator_distance, pd.commutator_distance);
      u.max_operator_distance = std::max(u.max_operator_distance, pd.operator_distance);
      u.pairs.push_back(pd);
    }
  }
  return u;
}

}  // namespace qcmod
