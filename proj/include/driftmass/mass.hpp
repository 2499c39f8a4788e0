#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "driftmass/chart.hpp"
#include "driftmass/decay.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/fit.hpp"
#include "driftmass/sphere_quadrature.hpp"

namespace driftmass {

enum class MassKind { x_adm, adm, charge };

inline const char* to_string(MassKind k) {
  switch (k) {
    case MassKind::x_adm: return "x_adm";
    case MassKind::adm: return "adm";
    default: return "charge";
  }
}

// One sweep of sphere integrals plus its large-radius extrapolation.
// The fit model is c0 + c1 * r^{-p}; the exponent comes from the decay rates,
// not from the data, so a bad fit shows up as residual instead of silently
// bending the answer.
struct MassEstimate {
  MassKind kind = MassKind::x_adm;
  std::vector<std::pair<double, double>> per_radius;  // (r, integral value)
  double extrapolated = 0;
  double c1 = 0;  // fitted coefficient of r^{-p}
  double p = 1;
  double fit_residual = 0;
  bool converged = false;
  std::string message;
};

namespace detail {

inline void require_radii(const std::vector<double>& radii) {
  if (radii.size() < 4) throw std::invalid_argument("need at least 4 radii for a mass sweep");
  for (size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1]) throw std::invalid_argument("radii must increase");
  if (radii.back() < 10.0 * radii.front())
    throw std::invalid_argument("radii must span at least a decade");
}

// shared tail-extrapolation logic
inline void finish_estimate(MassEstimate& est) {
  std::vector<double> r, v;
  for (auto& pr : est.per_radius) {
    r.push_back(pr.first);
    v.push_back(pr.second);
  }
  TailFit fit = fit_offset_power(r, v, est.p);
  if (!fit.ok) {
    est.message = "extrapolation fit is degenerate";
    return;
  }
  est.extrapolated = fit.c0;
  est.c1 = fit.c1;
  est.fit_residual = fit.rms;
  // sanity: deviations from the limit should not grow along the tail
  size_t n = est.per_radius.size();
  double scale = std::max(1.0, std::abs(est.extrapolated));
  double d_mid = std::abs(v[n - 3] - est.extrapolated);
  double d_end = std::abs(v[n - 1] - est.extrapolated);
  if (d_end > 2.0 * d_mid + 1e-11 * scale) {
    est.message = "per-radius values drift away from the fitted limit";
    return;
  }
  if (est.fit_residual > 1e-2 * scale) {
    est.message = "fit residual too large for the declared decay";
    return;
  }
  est.converged = true;
}

}  // namespace detail

// integrand of the flux mass at a point x with euclidean unit normal x/|x|:
//   (d_j g_ij - d_i g_jj + 2 X^i) n^i
// all indices euclidean; this is the quantity whose 1/(16 pi) flux limit is
// the drift-adjusted mass.
inline double mass_integrand(const Chart& chart, const DriftField& X, const Vec3& x) {
  auto J = metric_jets<1>(chart, x);
  double r = norm(x);
  if (r <= 0) throw std::domain_error("mass integrand needs x != 0");
  Vec3 n = (1.0 / r) * x;
  double acc = 0;
  for (int i = 0; i < 3; ++i) {
    double term = 0;
    for (int j = 0; j < 3; ++j) {
      term += J(i, j).deriv(j == 0, j == 1, j == 2);   // d_j g_ij
      term -= J(j, j).deriv(i == 0, i == 1, i == 2);   // d_i g_jj
    }
    acc += term * n[i];
  }
  if (!X.zero) {
    Vec3 xv = X.value(x);
    acc += 2.0 * dot(xv, n);
  }
  return acc;
}

inline MassEstimate x_adm_mass(const Chart& chart, const DriftField& X,
                               const std::vector<double>& radii, const SphereQuadrature& quad,
                               const DecayAudit& audit) {
  detail::require_radii(radii);
  MassEstimate est;
  est.kind = X.zero ? MassKind::adm : MassKind::x_adm;
  double tau = audit.tau_used;
  est.p = std::min(2.0 * tau - 1.0, X.zero ? tau : std::min(tau, audit.tau0_used));
  for (double r : radii) {
    double I = sphere_integral([&](const Vec3& y) { return mass_integrand(chart, X, y); }, r, quad);
    est.per_radius.emplace_back(r, I / (16.0 * M_PI));
  }
  detail::finish_estimate(est);
  return est;
}

inline MassEstimate x_adm_mass(const Chart& chart, const DriftField& X,
                               const std::vector<double>& radii, const SphereQuadrature& quad) {
  return x_adm_mass(chart, X, radii, quad, decay_audit(chart, X, radii));
}

// flux of a vector field through coordinate spheres, normalized by 4 pi;
// for the electric field this is the total charge. p is the fitted-decay
// exponent of the flux remainder (1 is right for Coulomb-type tails).
inline MassEstimate total_charge(const std::function<Vec3(const Vec3&)>& field,
                                 const std::vector<double>& radii, const SphereQuadrature& quad,
                                 double p = 1.0) {
  detail::require_radii(radii);
  MassEstimate est;
  est.kind = MassKind::charge;
  est.p = p;
  for (double r : radii) {
    double I = sphere_integral(
        [&](const Vec3& y) {
          double s = norm(y);
          return dot(field(y), (1.0 / s) * y);
        },
        r, quad);
    est.per_radius.emplace_back(r, I / (4.0 * M_PI));
  }
  detail::finish_estimate(est);
  return est;
}

// The flux mass is affine in the drift: m_{X1+X2} = m_{X1} + m_{X2} - m_adm.
// Returns the absolute defect of that identity on the extrapolated values.
inline double mass_linearity_check(const Chart& chart, const DriftField& X1, const DriftField& X2,
                                   const std::vector<double>& radii, const SphereQuadrature& quad) {
  DriftField sum = add_drifts(X1, X2);
  auto audit = decay_audit(chart, sum, radii);
  MassEstimate m12 = x_adm_mass(chart, sum, radii, quad, audit);
  MassEstimate m1 = x_adm_mass(chart, X1, radii, quad, audit);
  MassEstimate m2 = x_adm_mass(chart, X2, radii, quad, audit);
  MassEstimate m0 = x_adm_mass(chart, zero_drift(), radii, quad, audit);
  return std::abs(m12.extrapolated - m1.extrapolated - m2.extrapolated + m0.extrapolated);
}

}  // namespace driftmass
