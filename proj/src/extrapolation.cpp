#include <cmath>
#include <limits>

#include "qcmod/condenser_solver.hpp"
#include "qcmod/errors.hpp"

namespace qcmod {

std::string to_string(Extrapolation e) {
  switch (e) {
    case Extrapolation::none: return "none";
    case Extrapolation::richardson: return "richardson";
    case Extrapolation::power_fit: return "power_fit";
  }
  return "?";
}

Extrapolation extrapolation_from_string(const std::string& s) {
  if (s == "none") return Extrapolation::none;
  if (s == "richardson") return Extrapolation::richardson;
  if (s == "power_fit") return Extrapolation::power_fit;
  throw ValidationError("unknown extrapolation '" + s + "' (allowed: none, richardson, power_fit)");
}

namespace {

struct LinearFit {
  double c = 0.0, a = 0.0, residual = 0.0;
};

// least squares v ~ c + a * x
LinearFit fit_affine(std::span<const double> x, std::span<const double> v) {
  const std::size_t n = x.size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(n), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    M(static_cast<Eigen::Index>(i), 0) = 1.0;
    M(static_cast<Eigen::Index>(i), 1) = x[i];
    b(static_cast<Eigen::Index>(i)) = v[i];
  }
  const Eigen::Vector2d sol = M.colPivHouseholderQr().solve(b);
  LinearFit f;
  f.c = sol(0);
  f.a = sol(1);
  f.residual = (M * sol - b).norm();
  return f;
}

LinearFit fit_power(std::span<const double> R, std::span<const double> v, double e) {
  std::vector<double> x(R.size());
  for (std::size_t i = 0; i < R.size(); ++i) x[i] = std::pow(R[i], e);
  return fit_affine(x, v);
}

}  // namespace

ExtrapolationResult extrapolate(std::span<const double> scales, std::span<const double> values, Extrapolation method) {
  ExtrapolationResult out;
  if (scales.size() != values.size()) throw ValidationError("extrapolate: scales and values differ in length");
  const std::size_t n = values.size();
  if (n == 0) {
    out.note = "no data";
    return out;
  }
  bool positive = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(scales[i] > 0.0) || !std::isfinite(values[i])) {
      out.note = "scales must be positive and values finite";
      return out;
    }
    positive = positive && values[i] > 0.0;
  }
  if (n >= 2 && positive) {
    std::vector<double> lx(n), lv(n);
    for (std::size_t i = 0; i < n; ++i) {
      lx[i] = std::log(scales[i]);
      lv[i] = std::log(values[i]);
    }
    const LinearFit lf = fit_affine(lx, lv);
    out.loglog_exponent = lf.a;
    double mean = 0.0;
    for (double y : lv) mean += y;
    mean /= static_cast<double>(n);
    double tot = 0.0;
    for (double y : lv) tot += (y - mean) * (y - mean);
    out.loglog_r2 = tot > 0 ? 1.0 - lf.residual * lf.residual / tot : 1.0;
  }
  if (method == Extrapolation::none) {
    out.limit = values[n - 1];
    out.note = "no extrapolation requested; limit is the last value";
    return out;
  }
  if (n < 3) {
    out.note = "extrapolation needs at least 3 scales";
    return out;
  }
  if (method == Extrapolation::richardson) {
    const LinearFit f = fit_power(scales, values, -1.0);
    out.available = true;
    out.limit = f.c;
    out.amplitude = f.a;
    out.exponent = -1.0;
    out.residual = f.residual;
    return out;
  }
  // power fit: scan the exponent, then golden-section refinement
  auto resid = [&](double e) { return fit_power(scales, values, e).residual; };
  double best_e = -1.0, best_r = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 400; ++k) {
    const double e = -0.01 * k;
    const double r = resid(e);
    if (r < best_r) {
      best_r = r;
      best_e = e;
    }
  }
  double lo = std::min(-0.005, best_e + 0.01), hi = std::max(-4.0, best_e - 0.01);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi + (1 - g) * (lo - hi), x2 = hi + g * (lo - hi);
  double r1 = resid(x1), r2 = resid(x2);
  for (int it = 0; it < 80; ++it) {
    if (r1 < r2) {
      lo = x2;
      x2 = x1;
      r2 = r1;
      x1 = hi + (1 - g) * (lo - hi);
      r1 = resid(x1);
    } else {
      hi = x1;
      x1 = x2;
      r1 = r2;
      x2 = hi + g * (lo - hi);
      r2 = resid(x2);
    }
  }
  const double e = r1 < r2 ? x1 : x2;
  const LinearFit f = fit_power(scales, values, e);
  out.available = std::isfinite(f.c);
  out.limit = f.c;
  out.amplitude = f.a;
  out.exponent = e;
  out.residual = f.residual;
  if (!out.available)
    out.note = "power fit failed";
  else if (e > -0.01 || e < -3.99)
    out.note = "fitted exponent at the edge of the scan [-4, -0.005]; limit unreliable";
  return out;
}

}  // namespace qcmod
