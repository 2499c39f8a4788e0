#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "driftmass/vec.hpp"

namespace driftmass {

// Product quadrature on the unit sphere: Gauss-Legendre in cos(theta) times a
// uniform trapezoid in phi. Exact for spherical harmonics up to degree
// min(2 n_theta - 1, n_phi - 1); the phi rule wipes out every nonzero
// azimuthal frequency below n_phi, the rest is a polynomial in cos(theta).

struct SphereNode {
  Vec3 dir;
  double w;
};

struct SphereQuadrature {
  std::vector<SphereNode> nodes;
  int degree = 0;
};

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int l = 2; l <= n; ++l) {
        double p2 = ((2 * l - 1) * t * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    double p0 = 1.0, p1 = t;
    for (int l = 2; l <= n; ++l) {
      double p2 = ((2 * l - 1) * t * p1 - (l - 1) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

inline SphereQuadrature make_sphere_quadrature(int n_theta = 12, int n_phi = 24) {
  if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("quadrature sizes must be positive");
  std::vector<double> ct, wt;
  gauss_legendre(n_theta, ct, wt);
  SphereQuadrature q;
  q.degree = std::min(2 * n_theta - 1, n_phi - 1);
  q.nodes.reserve(size_t(n_theta) * n_phi);
  double wphi = 2.0 * M_PI / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    double c = ct[i], s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int j = 0; j < n_phi; ++j) {
      double phi = wphi * j;
      q.nodes.push_back({Vec3{s * std::cos(phi), s * std::sin(phi), c}, wt[i] * wphi});
    }
  }
  return q;
}

// integral over the coordinate sphere |x| = r of a scalar field, with the
// euclidean area element r^2 d(omega); fixed node order for determinism
template <class F>
double sphere_integral(F&& field, double r, const SphereQuadrature& q) {
  double acc = 0;
  for (const auto& n : q.nodes) acc += n.w * field(r * n.dir);
  return acc * r * r;
}

// real orthonormal spherical harmonics, for exactness tests and the
// singular-mode projections near the pole
inline double assoc_legendre(int l, int m, double x) {
  // P_l^m with Condon-Shortley phase
  double pmm = 1.0;
  if (m > 0) {
    double somx2 = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
    double fact = 1.0;
    for (int i = 0; i < m; ++i) {
      pmm *= -fact * somx2;
      fact += 2.0;
    }
  }
  if (l == m) return pmm;
  double pmmp1 = x * (2 * m + 1) * pmm;
  if (l == m + 1) return pmmp1;
  double pll = 0;
  for (int ll = m + 2; ll <= l; ++ll) {
    pll = (x * (2 * ll - 1) * pmmp1 - (ll + m - 1) * pmm) / (ll - m);
    pmm = pmmp1;
    pmmp1 = pll;
  }
  return pll;
}

inline double real_sph_harm(int l, int m, const Vec3& dir) {
  if (l < 0 || std::abs(m) > l) throw std::invalid_argument("bad (l, m)");
  double ct = dir.z;
  double phi = std::atan2(dir.y, dir.x);
  int am = std::abs(m);
  double logfact = 0;  // (l-|m|)! / (l+|m|)!
  for (int i = l - am + 1; i <= l + am; ++i) logfact -= std::log(double(i));
  double norm = std::sqrt((2 * l + 1) / (4.0 * M_PI) * std::exp(logfact));
  double p = assoc_legendre(l, am, ct);
  if (m == 0) return norm * p;
  double sq2 = std::sqrt(2.0);
  return m > 0 ? sq2 * norm * p * std::cos(am * phi) : sq2 * norm * p * std::sin(am * phi);
}

}  // namespace driftmass
