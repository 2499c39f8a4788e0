#pragma once

#include <cmath>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"

namespace driftmass {

// Pointwise application of the drift Laplacian to a scalar, from a
// caller-supplied gradient and Hessian in chart coordinates:
//   L_X f = g^{ij} (f_ij - Gamma^k_ij f_k) - (1/2) X^k f_k.
inline double drift_laplace_scalar(const Chart& ch, const DriftField& X, const Vec3& x,
                                   const Vec3& grad, const Sym3& hess) {
  auto jets = metric_jets<1>(ch, x);
  double g[3][3], dg[3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const auto& jc = jets(i, j);
      g[i][j] = jc.value();
      dg[0][i][j] = jc.deriv(1, 0, 0);
      dg[1][i][j] = jc.deriv(0, 1, 0);
      dg[2][i][j] = jc.deriv(0, 0, 1);
    }
  Sym3 gs{g[0][0], g[0][1], g[0][2], g[1][1], g[1][2], g[2][2]};
  Sym3 gi = inverse(gs);

  double acc = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double gam_grad = 0;  // Gamma^k_ij f_k
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          gam_grad += 0.5 * gi(k, l) * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]) * grad[k];
      acc += gi(i, j) * (hess(i, j) - gam_grad);
    }
  if (!X.zero) {
    Vec3 xv = X.value(x);
    acc -= 0.5 * dot(xv, grad);
  }
  return acc;
}

// Coefficients of the same operator in non-divergence form,
//   L_X f = g^{ij} f_ij + b^k f_k,
// for discretizations that supply their own difference stencils.
inline void drift_laplace_coeffs(const Chart& ch, const DriftField& X, const Vec3& x,
                                 Sym3& ginv, Vec3& b) {
  auto jets = metric_jets<1>(ch, x);
  double g[3][3], dg[3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const auto& jc = jets(i, j);
      g[i][j] = jc.value();
      dg[0][i][j] = jc.deriv(1, 0, 0);
      dg[1][i][j] = jc.deriv(0, 1, 0);
      dg[2][i][j] = jc.deriv(0, 0, 1);
    }
  Sym3 gs{g[0][0], g[0][1], g[0][2], g[1][1], g[1][2], g[2][2]};
  ginv = inverse(gs);
  b = Vec3{0, 0, 0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double gam = 0;  // Gamma^k_ij
        for (int l = 0; l < 3; ++l)
          gam += 0.5 * ginv(k, l) * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
        b[k] -= ginv(i, j) * gam;
      }
  if (!X.zero) {
    Vec3 xv = X.value(x);
    b = b - 0.5 * xv;
  }
}

// gradient and Hessian of a rotationally symmetric scalar phi(|x|)
inline void radial_scalar_jets(const Vec3& x, double dphi, double d2phi, Vec3& grad,
                               Sym3& hess) {
  double r = norm(x);
  Vec3 mu = x / r;
  grad = dphi * mu;
  auto hh = [&](int i, int j) {
    double del = (i == j) ? 1.0 : 0.0;
    return d2phi * mu[i] * mu[j] + dphi / r * (del - mu[i] * mu[j]);
  };
  hess = Sym3{hh(0, 0), hh(0, 1), hh(0, 2), hh(1, 1), hh(1, 2), hh(2, 2)};
}

// finite-difference application to an arbitrary scalar closure; independent
// route for end-to-end residual checks (noise ~ interpolation error / h^2)
template <class F>
double drift_laplace_fd(const Chart& ch, const DriftField& X, const Vec3& x, F&& f,
                        double h) {
  auto at = [&](double a, double b, double c) { return f(Vec3{x.x + a, x.y + b, x.z + c}); };
  double f0 = at(0, 0, 0);
  Vec3 grad;
  double hess[3][3];
  for (int i = 0; i < 3; ++i) {
    double s[3] = {0, 0, 0};
    s[i] = h;
    double fp = at(s[0], s[1], s[2]), fp2 = at(2 * s[0], 2 * s[1], 2 * s[2]);
    double fm = at(-s[0], -s[1], -s[2]), fm2 = at(-2 * s[0], -2 * s[1], -2 * s[2]);
    grad[i] = (-fp2 + 8 * fp - 8 * fm + fm2) / (12 * h);
    hess[i][i] = (-fp2 + 16 * fp - 30 * f0 + 16 * fm - fm2) / (12 * h * h);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      double si[3] = {0, 0, 0}, sj[3] = {0, 0, 0};
      si[i] = h;
      sj[j] = h;
      double v = (at(si[0] + sj[0], si[1] + sj[1], si[2] + sj[2]) -
                  at(si[0] - sj[0], si[1] - sj[1], si[2] - sj[2]) -
                  at(-si[0] + sj[0], -si[1] + sj[1], -si[2] + sj[2]) +
                  at(-si[0] - sj[0], -si[1] - sj[1], -si[2] - sj[2])) /
                 (4 * h * h);
      hess[i][j] = hess[j][i] = v;
    }
  Sym3 hs{hess[0][0], hess[0][1], hess[0][2], hess[1][1], hess[1][2], hess[2][2]};
  return drift_laplace_scalar(ch, X, x, grad, hs);
}

}  // namespace driftmass
