#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/level_surface.hpp"
#include "driftmass/potential.hpp"

namespace driftmass {

// The level-set functional
//   F(t) = 4 pi t + t^3 int |grad u|^2 - t^2 int |grad u| H + t^2 int g(X, grad u)
// over {u = 1 - 1/t}, together with its regrouped form
//   F(t) = XM(t) + (t/4) int (2|grad u|/(1-u) - H)^2,
//   XM(t) = (t/4) (16 pi - int H^2 + 4 int g(X, grad u)/(1-u)).
// Both are assembled from the same surface samples; on the level set
// 1 - u = 1/t exactly, so their difference is pure floating-point noise.

struct FSample {
  double t = 0;
  double term_linear = 0;  // 4 pi t
  double term_grad2 = 0;   // t^3 int |grad u|^2
  double term_H = 0;       // -t^2 int |grad u| H
  double term_X = 0;       // t^2 int g(X, grad u)
  double F = 0;
  double willmore_xm = 0;
  double willmore_residual = 0;
  double area = 0;
  bool regular = false;
};

inline FSample f_sample(const LevelSurface& surf) {
  if (!(surf.t > 0)) throw std::invalid_argument("surface carries no level parameter");
  FSample out;
  out.t = surf.t;
  out.area = surf.total_area;
  out.regular = surf.is_regular;
  const double t = surf.t;
  double g2 = 0, wh = 0, xw = 0, h2 = 0, res = 0;
  for (const auto& el : surf.elements) {
    g2 += el.grad_norm * el.grad_norm * el.weight;
    wh += el.grad_norm * el.mean_curv * el.weight;
    xw += el.drift_normal * el.grad_norm * el.weight;  // g(X, grad u) = g(X, nu)|grad u|
    h2 += el.mean_curv * el.mean_curv * el.weight;
    double d = 2.0 * t * el.grad_norm - el.mean_curv;  // 2|grad u|/(1-u) on the level
    res += d * d * el.weight;
  }
  out.term_linear = 4.0 * M_PI * t;
  out.term_grad2 = t * t * t * g2;
  out.term_H = -t * t * wh;
  out.term_X = t * t * xw;
  out.F = out.term_linear + out.term_grad2 + out.term_H + out.term_X;
  out.willmore_xm = 0.25 * t * (16.0 * M_PI - h2 + 4.0 * t * xw);
  out.willmore_residual = 0.25 * t * res;
  return out;
}

inline FSample f_of_t(const PotentialField& pot, const Chart& ch, const DriftField& X, double t,
                      const SphereQuadrature* quad = nullptr) {
  return f_sample(extract_level(pot, ch, X, t, quad));
}

// irregular levels come back flagged rather than dropped, so reports can
// list what a monotonicity grid skipped
inline std::vector<FSample> f_sweep(const PotentialField& pot, const Chart& ch,
                                    const DriftField& X, const std::vector<double>& ts,
                                    const SphereQuadrature* quad = nullptr) {
  std::vector<FSample> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(f_of_t(pot, ch, X, t, quad));
  return out;
}

// The accumulated functional: 2 pi t^2 plus the bulk integral over the
// sublevel set {u < 1 - 1/t} of
//   |grad u|^3/(1-u)^5 + g(grad|grad u|, grad u)/(1-u)^4
//     + (1/2) g(X, grad u) |grad u|/(1-u)^4.
// By the coarea formula this equals the running integral of F from zero.
// Built from bulk data (second derivatives of the profile), so it shares
// nothing with the surface samples except the solved potential itself.
inline double coarea_functional(const PotentialField& pot, const Chart& ch, const DriftField& X,
                                double t) {
  if (pot.rep != PotentialRep::radial_profile)
    throw std::logic_error("coarea functional is implemented for radial representations");
  detail::require_radial_pair(ch, X, "coarea_functional");
  double s = 1.0 - 1.0 / t;
  // boundary charts: u >= 0, so small t means an empty sublevel set
  if (!pot.has_pole && s < pot.radial.u.front()) return 2.0 * M_PI * t * t;
  double r_hi = level_radius(pot, t);
  double r_lo = pot.radial.r_min;
  double acc = 0;
  if (r_hi > r_lo) {
    // Gauss-Legendre in log r. Pole mode leaves the ball below the first
    // profile node uncovered; the integrand scales like r there, so the
    // missing piece is O(r_min^2).
    std::vector<double> xs, ws;
    gauss_legendre(16, xs, ws);
    double s0 = std::log(r_lo), s1 = std::log(r_hi);
    int nseg = std::max(8, int(20.0 * (s1 - s0) / std::log(10.0)) + 1);
    for (int k = 0; k < nseg; ++k) {
      double a = s0 + (s1 - s0) * k / nseg;
      double b = s0 + (s1 - s0) * (k + 1) / nseg;
      double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (size_t q = 0; q < xs.size(); ++q) {
        double rr = std::exp(mid + half * xs[q]);
        auto jets = metric_jets<1>(ch, Vec3{rr, 0, 0});
        double al = jets.xx.value();
        double be = jets.yy.value();
        double dal = jets.xx.deriv(1, 0, 0);
        double sal = std::sqrt(al);
        double uu = pot.radial.value(rr);
        double up = pot.radial.deriv(rr);
        double upp = pot.radial.second_deriv(rr);
        double w = up / sal;
        double wp = upp / sal - up * dal / (2.0 * al * sal);
        double chi = X.zero ? 0.0 : X.value(Vec3{rr, 0, 0}).x;
        double om = 1.0 - uu;
        double om2 = om * om;
        double integrand = w * w * w / (om2 * om2 * om) + (wp * up / al) / (om2 * om2) +
                           0.5 * chi * up * w / (om2 * om2);
        // volume element sqrt(alpha) beta r^2 dr dOmega, dr = r d(log r)
        acc += ws[q] * half * integrand * sal * be * rr * rr * rr * 4.0 * M_PI;
      }
    }
  }
  return 2.0 * M_PI * t * t + acc;
}

// running integral of F by trapezoid on a geometric t-grid, the independent
// partner of coarea_functional. Boundary charts carry no level sets below
// t = 1, where F(t) = 4 pi t integrates in closed form; pole charts start
// the grid at t_floor and close the head with F -> 0 linearly.
inline double f_running_integral(const PotentialField& pot, const Chart& ch, const DriftField& X,
                                 double t, int n, double t_floor = 1e-3,
                                 const SphereQuadrature* quad = nullptr) {
  if (n < 2) throw std::invalid_argument("f_running_integral needs n >= 2 panels");
  if (!(t_floor > 0)) throw std::invalid_argument("f_running_integral needs t_floor > 0");
  double lo = pot.has_pole ? t_floor : 1.0;
  double acc = pot.has_pole ? 0.0 : 2.0 * M_PI;
  if (!(t > lo))
    throw std::invalid_argument("f_running_integral needs t above the grid start");
  double f_prev = f_of_t(pot, ch, X, lo, quad).F;
  if (pot.has_pole) acc += 0.5 * f_prev * lo;
  double t_prev = lo;
  for (int k = 1; k <= n; ++k) {
    double tk = (k == n) ? t : lo * std::pow(t / lo, double(k) / n);
    double fk = f_of_t(pot, ch, X, tk, quad).F;
    acc += 0.5 * (f_prev + fk) * (tk - t_prev);
    t_prev = tk;
    f_prev = fk;
  }
  return acc;
}

}  // namespace driftmass
