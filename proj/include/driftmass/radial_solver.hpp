#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "driftmass/potential.hpp"

namespace driftmass {

// Exact reduction for rotationally symmetric data. Writing the metric as
// alpha(r) dr^2 + beta(r) r^2 dOmega^2 and the drift as X = chi(r) x/|x|,
// the operator applied to u(r) collapses to
//   (p u')' = (1/2) q chi u',   p = beta r^2 / sqrt(alpha),  q = alpha p,
// so p u' = k exp(J) with J(r) = (1/2) int alpha chi ds, and u follows from
// one more quadrature. Both run as RK4 on a log grid, swept from the outside
// in so the rounding of the cumulative integral stays relative to the local
// tail size; the piece beyond r_max is integrated in t = 1/r where the
// integrand is bounded. Normalization: the pole demands a unit 1/d_g
// singularity, which pins k once J is referenced at the origin; with an
// inner boundary sphere instead, u = 0 there and u -> 1 at infinity.

struct RadialOptions {
  double r_min_factor = 1e-4;  // pole mode inner cutoff, times domain scale
  double r_max_factor = 1e6;   // outer cutoff, times domain scale
  int steps_per_decade = 1200;
  double fit_tau = 0;  // <= 0: use the declared decay rates
};

namespace detail {

struct RadialCoeffs {
  const Chart* ch;
  const DriftField* X;
  // dJ/dr and the u' integrand exp(J)/p at radius r
  void rates(double r, double J, double& dJ, double& dI) const {
    Sym3 g = metric_value(*ch, {r, 0, 0});
    double al = g.xx, be = g.yy;
    double chi = X->zero ? 0.0 : X->value({r, 0, 0}).x;
    double p = be * r * r / std::sqrt(al);
    dJ = 0.5 * al * chi;
    dI = std::exp(J) / p;
  }
};

}  // namespace detail

inline PotentialField solve_radial(const Chart& ch, const DriftField& X,
                                   RadialOptions opt = {}) {
  if (!ch.traits.radial || !(X.zero || X.radial))
    throw std::invalid_argument(
        "solve_radial: chart and drift must be rotationally symmetric");
  const bool boundary_mode = ch.traits.boundary_radius > 0;
  if (!boundary_mode && ch.traits.inner_radius > 0)
    throw std::domain_error(
        "solve_radial: chart excludes the origin; use a boundary_radius chart or the grid "
        "path");

  detail::RadialCoeffs rc{&ch, &X};
  const double scale = std::max(1.0, ch.domain_min());
  const double r_min = boundary_mode ? ch.traits.boundary_radius : opt.r_min_factor * scale;
  const double r_max = opt.r_max_factor * scale;
  const int n = std::max(64, int(opt.steps_per_decade * std::log10(r_max / r_min)) + 1);
  const double dt = std::log(r_max / r_min) / n;

  // beyond r_max: integrate in t = 1/r down to r ~ 1e9 scale, model the rest
  // as a constant integrand in t; J referenced to 0 at r_max throughout
  double tail = 0;
  {
    const double t_hi = 1.0 / r_max, t_lo = 1e-9 / scale;
    const int nt = 256;
    const double ht = (t_hi - t_lo) / nt;
    auto f = [&](double t, double Jc, double& kJ, double& kI) {
      double dJ, dI;
      rc.rates(1.0 / t, Jc, dJ, dI);
      kJ = dJ / (t * t);  // d/d(-t)
      kI = dI / (t * t);
    };
    double Jt = 0;
    for (int i = 0; i < nt; ++i) {
      double t = t_hi - i * ht;
      double k1J, k1I, k2J, k2I, k3J, k3I, k4J, k4I;
      f(t, Jt, k1J, k1I);
      f(t - 0.5 * ht, Jt + 0.5 * ht * k1J, k2J, k2I);
      f(t - 0.5 * ht, Jt + 0.5 * ht * k2J, k3J, k3I);
      f(t - ht, Jt + ht * k3J, k4J, k4I);
      Jt += ht / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J);
      tail += ht / 6.0 * (k1I + 2 * k2I + 2 * k3I + k4I);
    }
    double dJe, dIe;
    rc.rates(1.0 / t_lo, Jt, dJe, dIe);
    tail += dIe / (t_lo * t_lo) * t_lo;
  }

  // backward sweep: J referenced to 0 at r_max, G(r) = int_r^{r_max} e^J/p + tail
  std::vector<double> rs(n + 1), Js(n + 1), Gs(n + 1);
  for (int i = 0; i <= n; ++i) rs[i] = r_min * std::exp(i * dt);
  rs[n] = r_max;
  Js[n] = 0;
  Gs[n] = tail;
  for (int i = n; i > 0; --i) {
    double r_hi = rs[i];
    auto f = [&](double back, double Jc, double& kJ, double& kI) {
      double rr = r_hi * std::exp(-back);
      double dJ, dI;
      rc.rates(rr, Jc, dJ, dI);
      kJ = -rr * dJ;  // d/d(back), back = log(r_hi) - log(r)
      kI = rr * dI;
    };
    double J = Js[i], k1J, k1I, k2J, k2I, k3J, k3I, k4J, k4I;
    f(0.0, J, k1J, k1I);
    f(0.5 * dt, J + 0.5 * dt * k1J, k2J, k2I);
    f(0.5 * dt, J + 0.5 * dt * k2J, k3J, k3I);
    f(dt, J + dt * k3J, k4J, k4I);
    Js[i - 1] = J + dt / 6.0 * (k1J + 2 * k2J + 2 * k3J + k4J);
    Gs[i - 1] = Gs[i] + dt / 6.0 * (k1I + 2 * k2I + 2 * k3I + k4I);
  }

  // reference J at the origin for the pole normalization u' = e^{J - J(0)}/p
  double J_origin = Js[0];
  if (!boundary_mode && !X.zero) {
    static const int gn = 8;
    std::vector<double> gx, gw;
    gauss_legendre(gn, gx, gw);
    double dJ0 = 0;
    for (int i = 0; i < gn; ++i) {
      double s = 0.5 * r_min * (1.0 + gx[i]);
      Sym3 g = metric_value(ch, {s, 0, 0});
      dJ0 += 0.5 * r_min * gw[i] * 0.5 * g.xx * X.value({s, 0, 0}).x;
    }
    J_origin = Js[0] - dJ0;
  }

  // pole mode: 1 - u = e^{-J(0)} G; boundary mode: 1 - u = G / G(r_min)
  const double knorm = boundary_mode ? 1.0 / Gs[0] : std::exp(-J_origin);

  PotentialField pot;
  pot.rep = PotentialRep::radial_profile;
  pot.pole = Vec3{0, 0, 0};
  pot.has_pole = !boundary_mode;
  pot.domain_scale = scale;
  pot.regular_threshold = 1e-8 / (scale * scale);

  RadialProfile prof;
  prof.r = rs;
  prof.u.resize(n + 1);
  prof.du.resize(n + 1);
  for (int i = 0; i <= n; ++i) {
    double r = rs[i];
    Sym3 g = metric_value(ch, {r, 0, 0});
    double p = g.yy * r * r / std::sqrt(g.xx);
    prof.u[i] = 1.0 - knorm * Gs[i];
    prof.du[i] = knorm * std::exp(Js[i]) / p;
    if (i > 0 && !(prof.u[i] > prof.u[i - 1]))
      throw std::runtime_error("solve_radial: profile not strictly increasing");
    if (!(prof.u[i] < 1.0))
      throw std::runtime_error("solve_radial: profile reached 1 before the outer cutoff");
  }
  prof.r_min = rs[0];
  prof.r_max = rs[n];
  pot.radial = std::move(prof);

  if (pot.has_pole) {
    pot.series = pole_expansion(ch, X, pot.pole);
    pot.series_ok = true;
  }

  double tau = opt.fit_tau;
  if (tau <= 0) {
    tau = ch.traits.declared_tau;
    if (!X.zero) tau = std::min(tau, X.declared_tau0);
  }
  std::vector<double> fit_r;
  for (int i = 0; i < 12; ++i)
    fit_r.push_back(r_max * 1e-4 * std::pow(1e2, i / 11.0));
  pot.far = far_field_fit(pot, fit_r, tau);
  return pot;
}

}  // namespace driftmass
