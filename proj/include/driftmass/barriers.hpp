#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/drift_laplace.hpp"
#include "driftmass/potential.hpp"
#include "driftmass/sphere_quadrature.hpp"

namespace driftmass {

// Exterior comparison functions phi_pm = 1/|x| -/+ 1/|x|^{1+eps}. For
// 0 < eps < tau the operator eventually has a definite sign on them
// (negative on phi_plus, positive on phi_minus); once both signs hold on a
// shell, the kernel is pinched between multiples of the pair. The constants
// come from the extrema of G on the validation sphere: at |x| = R the pinch
// must reduce to equality, so c_pm = ext G / phi_pm(R).

struct BarrierPair {
  double epsilon = 0;
  double validated_radius = 0;
  bool ok = false;
  std::string message;
  double worst_plus = 0;   // max of L_X phi_plus over the shell, want < 0
  double worst_minus = 0;  // min of L_X phi_minus over the shell, want > 0

  double phi_plus(double r) const { return 1.0 / r - std::pow(r, -1.0 - epsilon); }
  double phi_minus(double r) const { return 1.0 / r + std::pow(r, -1.0 - epsilon); }
};

// L_X applied to phi_pm at a chart point; sign +1 for phi_plus, -1 for phi_minus
inline double lx_barrier(const Chart& ch, const DriftField& X, double eps, int sign,
                         const Vec3& x) {
  double r = norm(x);
  double dphi = -1.0 / (r * r) + sign * (1.0 + eps) * std::pow(r, -2.0 - eps);
  double d2phi = 2.0 / (r * r * r) - sign * (1.0 + eps) * (2.0 + eps) * std::pow(r, -3.0 - eps);
  Vec3 grad;
  Sym3 hess;
  radial_scalar_jets(x, dphi, d2phi, grad, hess);
  return drift_laplace_scalar(ch, X, x, grad, hess);
}

// doubling search for the smallest tested radius whose shell [R, 8R] shows
// the correct operator signs on a dense sample
inline BarrierPair barrier_pair(const Chart& ch, const DriftField& X, double eps,
                                double tau_fit, double r_start = 0, double r_cap = 0) {
  if (!(eps > 0) || !(eps < tau_fit))
    throw std::invalid_argument("barrier exponent must satisfy 0 < eps < tau_fit; got eps=" +
                                std::to_string(eps) + ", tau_fit=" + std::to_string(tau_fit));
  const double scale = std::max(1.0, ch.domain_min());
  if (r_start <= 0) r_start = 2.0 * scale;
  if (r_start <= 1.0) r_start = 1.0 + 1e-3;  // phi_plus must be positive on the shell
  if (r_cap <= 0) r_cap = 65536.0 * scale;

  SphereQuadrature quad = make_sphere_quadrature(8, 16);
  BarrierPair bp;
  bp.epsilon = eps;
  for (double R = r_start; R <= r_cap; R *= 2) {
    double worst_p = -1e300, worst_m = 1e300;
    bool good = true;
    for (int k = 0; k < 10 && good; ++k) {
      double r = R * std::pow(8.0, k / 9.0);
      for (const auto& n : quad.nodes) {
        Vec3 x = r * n.dir;
        double lp = lx_barrier(ch, X, eps, +1, x);
        double lm = lx_barrier(ch, X, eps, -1, x);
        worst_p = std::max(worst_p, lp);
        worst_m = std::min(worst_m, lm);
        if (!(lp < 0) || !(lm > 0)) {
          good = false;
          break;
        }
      }
    }
    if (good) {
      bp.validated_radius = R;
      bp.worst_plus = worst_p;
      bp.worst_minus = worst_m;
      bp.ok = true;
      return bp;
    }
  }
  bp.message = "barrier validation failed";
  return bp;
}

struct SandwichReport {
  bool ok = false;
  double c_minus = 0;
  double c_plus = 0;
  double margin = 0;  // most negative slack seen (>= -tol when ok)
  double radius = 0;
  int n_samples = 0;
  std::string message;
};

// pinch 4 pi G = 1 - u between c_minus phi_minus and c_plus phi_plus on
// [R, outer_factor R], with the constants read off the sphere |x| = R
inline SandwichReport sandwich_check(const PotentialField& pot, const BarrierPair& bp,
                                     double outer_factor = 64, int n_radii = 12,
                                     const SphereQuadrature* quad = nullptr) {
  if (!bp.ok) throw std::invalid_argument("sandwich_check needs a validated barrier pair");
  SphereQuadrature local;
  if (!quad) {
    local = make_sphere_quadrature(8, 16);
    quad = &local;
  }
  const double R = bp.validated_radius;
  const double fourpi = 4.0 * M_PI;

  double g_min = 1e300, g_max = -1e300;
  for (const auto& n : quad->nodes) {
    double G = (1.0 - pot.value(pot.pole + R * n.dir)) / fourpi;
    g_min = std::min(g_min, G);
    g_max = std::max(g_max, G);
  }
  SandwichReport rep;
  rep.radius = R;
  rep.c_minus = g_min / bp.phi_minus(R);
  rep.c_plus = g_max / bp.phi_plus(R);
  if (!(g_min > 0)) {
    rep.message = "kernel not positive on the validation sphere";
    return rep;
  }

  double margin = 1e300;
  int count = 0;
  for (int k = 0; k < n_radii; ++k) {
    double r = R * std::pow(outer_factor, double(k) / (n_radii - 1));
    double lo = rep.c_minus * bp.phi_minus(r), hi = rep.c_plus * bp.phi_plus(r);
    for (const auto& n : quad->nodes) {
      double G = (1.0 - pot.value(pot.pole + r * n.dir)) / fourpi;
      margin = std::min(margin, std::min(G - lo, hi - G));
      ++count;
    }
  }
  rep.margin = margin;
  rep.n_samples = count;
  const double tol = 1e-12 / R;
  rep.ok = margin >= -tol;
  if (!rep.ok) rep.message = "sandwich violated";
  return rep;
}

}  // namespace driftmass
