#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/drift_laplace.hpp"
#include "driftmass/fit.hpp"
#include "driftmass/grid_field.hpp"
#include "driftmass/pole_expansion.hpp"
#include "driftmass/sphere_quadrature.hpp"

namespace driftmass {

// u = 1 - 4 pi G with G the minimal positive kernel of the drift Laplacian.
// Solvers fill one of three representations; far_fit records the constants of
// the expansion u = 1 - B/|x| + O(|x|^{-1-tau}), with A = B / 4 pi.

// log-spaced radial samples with exact nodal derivatives, cubic Hermite in
// between; above r_max the profile continues along the 1 - const/r tail
struct RadialProfile {
  std::vector<double> r, u, du;
  double r_min = 0, r_max = 0;

  bool empty() const { return r.empty(); }

  size_t interval(double rr) const {
    size_t hi = size_t(std::upper_bound(r.begin(), r.end(), rr) - r.begin());
    if (hi == 0) hi = 1;
    if (hi >= r.size()) hi = r.size() - 1;
    return hi - 1;
  }

  double value(double rr) const {
    if (empty()) throw std::logic_error("radial profile is empty");
    if (rr < r_min * (1.0 - 1e-9))
      throw std::domain_error("radial profile: point below the inner radius");
    if (rr >= r_max) return 1.0 - (1.0 - u.back()) * r_max / rr;
    size_t i = interval(rr);
    double h = r[i + 1] - r[i], s = (rr - r[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * u[i] + (s3 - 2 * s2 + s) * h * du[i] +
           (-2 * s3 + 3 * s2) * u[i + 1] + (s3 - s2) * h * du[i + 1];
  }

  double deriv(double rr) const {
    if (empty()) throw std::logic_error("radial profile is empty");
    if (rr < r_min * (1.0 - 1e-9))
      throw std::domain_error("radial profile: point below the inner radius");
    if (rr >= r_max) return (1.0 - u.back()) * r_max / (rr * rr);
    size_t i = interval(rr);
    double h = r[i + 1] - r[i], s = (rr - r[i]) / h;
    double s2 = s * s;
    return ((6 * s2 - 6 * s) * u[i] + (3 * s2 - 4 * s + 1) * h * du[i] +
            (-6 * s2 + 6 * s) * u[i + 1] + (3 * s2 - 2 * s) * h * du[i + 1]) /
           h;
  }

  // u'' by a five-point Lagrange derivative of the nodal du samples; the log
  // grid keeps the stencil balanced, so this sits one order above the Hermite
  double second_deriv(double rr) const {
    if (empty()) throw std::logic_error("radial profile is empty");
    if (r.size() < 5) throw std::logic_error("radial profile too short to differentiate");
    if (rr < r_min * (1.0 - 1e-9))
      throw std::domain_error("radial profile: point below the inner radius");
    if (rr >= r_max) return -2.0 * (1.0 - u.back()) * r_max / (rr * rr * rr);
    size_t i = interval(rr);
    size_t j0 = (i >= 2) ? i - 2 : 0;
    if (j0 + 5 > r.size()) j0 = r.size() - 5;
    double acc = 0;
    for (size_t j = j0; j < j0 + 5; ++j) {
      double denom = 1.0, dsum = 0;
      for (size_t l = j0; l < j0 + 5; ++l) {
        if (l == j) continue;
        denom *= r[j] - r[l];
        double prod = 1.0;
        for (size_t k = j0; k < j0 + 5; ++k) {
          if (k == j || k == l) continue;
          prod *= rr - r[k];
        }
        dsum += prod;
      }
      acc += du[j] * dsum / denom;
    }
    return acc;
  }
};

enum class PotentialRep { radial_profile, grid_samples, closed_form };

struct FarFit {
  double A = 0;
  double B = 0;
  double c1 = 0;  // coefficient of the fitted |x|^{-tau} correction to (1-u)|x|
  double residual = 0;
  double tau = 0;
  bool ok = false;
  std::string message;
};

struct PotentialField {
  PotentialRep rep = PotentialRep::closed_form;
  Vec3 pole{0, 0, 0};
  bool has_pole = true;  // false: inner Dirichlet boundary instead of a pole
  FarFit far;
  PoleExpansion series;
  bool series_ok = false;
  double regular_threshold = 0;  // level sets with |grad u| below this are skipped
  double domain_scale = 1;

  RadialProfile radial;                     // radial_profile
  std::shared_ptr<const GridData> grid;     // grid_samples
  std::function<double(const Vec3&)> fn;    // grid_samples / closed_form
  std::function<Vec3(const Vec3&)> fn_grad;

  double value(const Vec3& x) const {
    if (rep == PotentialRep::radial_profile) return radial.value(norm(x - pole));
    if (!fn) throw std::logic_error("potential field has no value closure");
    return fn(x);
  }

  Vec3 gradient(const Vec3& x) const {
    if (rep == PotentialRep::radial_profile) {
      Vec3 d = x - pole;
      double rr = norm(d);
      return radial.deriv(rr) / rr * d;
    }
    if (!fn_grad) throw std::logic_error("potential field has no gradient closure");
    return fn_grad(x);
  }
};

// least-squares fit of the sphere-averaged (1 - u) |x| against B + c |x|^{-tau}
inline FarFit far_field_fit(const PotentialField& pot, const std::vector<double>& radii,
                            double tau, const SphereQuadrature* quad = nullptr) {
  if (radii.size() < 3) throw std::invalid_argument("far_field_fit needs at least 3 radii");
  for (size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1]))
      throw std::invalid_argument("far_field_fit radii must increase");
  if (!(tau > 0)) throw std::invalid_argument("far_field_fit needs tau > 0");

  std::vector<double> y;
  y.reserve(radii.size());
  if (pot.rep == PotentialRep::radial_profile) {
    for (double r : radii) y.push_back((1.0 - pot.radial.value(r)) * r);
  } else {
    SphereQuadrature local;
    if (!quad) {
      local = make_sphere_quadrature();
      quad = &local;
    }
    for (double r : radii) {
      double acc = 0;
      for (const auto& n : quad->nodes) acc += n.w * (1.0 - pot.value(pot.pole + r * n.dir));
      y.push_back(acc / (4.0 * M_PI) * r);
    }
  }

  TailFit tf = fit_offset_power(radii, y, tau);
  FarFit out;
  out.tau = tau;
  if (!tf.ok) {
    out.message = "far-field fit: degenerate least squares";
    return out;
  }
  out.B = tf.c0;
  out.A = tf.c0 / (4.0 * M_PI);
  out.c1 = tf.c1;
  out.residual = tf.rms;
  if (tf.rms <= 1e-3 * std::max(std::abs(tf.c0), 1e-12)) {
    out.ok = true;
  } else {
    out.message = "far-field model violated";
  }
  return out;
}

// order of contact between the solved potential and the truncated pole series:
// on shrinking dyadic windows along rays through o, fit a cubic in r to
// u_solved - u_series (absorbing the smooth remainder) and read the decay of
// the leftover rms. smooth remainder + order-3 truncation should give q ~ 4.
struct PoleMatch {
  double q = 0;        // fitted contact order
  double rms_max = 0;  // largest windowed residual
  bool floored = false;  // residuals at roundoff level; q reported as large
  bool ok = false;
};

inline PoleMatch pole_match_order(const PotentialField& pot, const NormalJets& nj,
                                  double r0, int n_windows = 5,
                                  const std::vector<Vec3>& dirs = {{1, 0, 0},
                                                                   {0, 1, 0},
                                                                   {0, 0, 1},
                                                                   {0.57735026918962576,
                                                                    0.57735026918962576,
                                                                    0.57735026918962576}}) {
  if (!pot.series_ok) throw std::logic_error("pole_match_order: potential has no series");
  if (n_windows < 2) throw std::invalid_argument("pole_match_order needs >= 2 windows");
  PoleMatch out;
  std::vector<double> scales, rho;
  const int n_samp = 12;
  for (int k = 0; k < n_windows; ++k) {
    double lo = r0 * std::pow(0.5, k);
    double worst = 0;
    for (const Vec3& d0 : dirs) {
      Vec3 mu = normalized(d0);
      std::vector<std::vector<double>> rows;
      std::vector<double> rhs;
      for (int s = 0; s < n_samp; ++s) {
        double rr = lo * std::pow(2.0, double(s) / (n_samp - 1));
        Vec3 xi = rr * mu;
        Vec3 x = chart_point(nj, xi);
        double diff = pot.value(x) - (1.0 - pot.series.evaluate(xi));
        rows.push_back({1.0, rr, rr * rr, rr * rr * rr});
        rhs.push_back(diff);
      }
      LsqFit f = least_squares_qr(rows, rhs);
      if (!f.ok) return out;
      worst = std::max(worst, f.rms);
    }
    // roundoff floor scales with the 1/r size of the kernel on the window
    if (worst > 1e-12 * (1.0 + 1.0 / lo)) {
      scales.push_back(lo);
      rho.push_back(worst);
    }
    out.rms_max = std::max(out.rms_max, worst);
  }
  if (scales.size() < 2) {
    out.floored = true;
    out.q = 16;  // at roundoff on (nearly) every window
    out.ok = true;
    return out;
  }
  SlopeFit sf = loglog_slope(scales, rho);
  if (!sf.ok) return out;
  out.q = sf.slope;
  out.ok = true;
  return out;
}

}  // namespace driftmass
