#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "driftmass/vec.hpp"

namespace driftmass {

// Node samples of the potential on a Cartesian cube centered at the pole,
// restricted to the annulus r_in <= |x| <= r_out. Nodes outside the annulus
// within a couple of cells of either sphere hold boundary-data values so that
// trilinear cells near the spheres stay complete; everything further out is
// NaN and must not be touched. Gradient fields are filled by the solver with
// the same centered stencils as the operator rows.

struct GridData {
  double r_in = 0, r_out = 0;
  int n = 0;       // nodes per axis
  double h = 0;    // spacing
  double x0 = 0;   // first node coordinate, = -r_out on each axis

  std::vector<double> u;
  std::array<std::vector<double>, 3> du;      // coordinate derivatives of u
  std::vector<double> gnorm;                  // |grad u| in g
  std::array<std::vector<double>, 3> dgnorm;  // coordinate derivatives of |grad u|

  double final_residual = 0;  // relative residual of the last linear solve

  size_t idx(int i, int j, int k) const { return (size_t(i) * n + j) * n + k; }

  Vec3 node(int i, int j, int k) const {
    return Vec3{x0 + i * h, x0 + j * h, x0 + k * h};
  }

  Vec3 node_of(size_t p) const {
    return node(int(p / (size_t(n) * n)), int((p / n) % n), int(p % n));
  }

  bool covers(const Vec3& xi) const {
    double r = norm(xi);
    return r >= r_in * (1.0 - 1e-12) && r <= r_out * (1.0 + 1e-12);
  }

  struct Cell {
    int i, j, k;
    double fx, fy, fz;
  };

  Cell locate(const Vec3& xi) const {
    auto clip = [&](double c, int& i, double& f) {
      double s = (c - x0) / h;
      i = int(std::floor(s));
      if (i < 0) i = 0;
      if (i > n - 2) i = n - 2;
      f = s - i;
    };
    Cell c;
    clip(xi.x, c.i, c.fx);
    clip(xi.y, c.j, c.fy);
    clip(xi.z, c.k, c.fz);
    return c;
  }

  double interp(const std::vector<double>& f, const Vec3& xi) const {
    if (!covers(xi)) throw std::domain_error("grid field queried outside the solved annulus");
    Cell c = locate(xi);
    double acc = 0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) {
          double w = (a ? c.fx : 1.0 - c.fx) * (b ? c.fy : 1.0 - c.fy) * (d ? c.fz : 1.0 - c.fz);
          acc += w * f[idx(c.i + a, c.j + b, c.k + d)];
        }
    if (!std::isfinite(acc))
      throw std::domain_error("grid field queried outside the solved annulus");
    return acc;
  }

  double value(const Vec3& xi) const { return interp(u, xi); }

  Vec3 coord_gradient(const Vec3& xi) const {
    return Vec3{interp(du[0], xi), interp(du[1], xi), interp(du[2], xi)};
  }

  double grad_norm_g(const Vec3& xi) const { return interp(gnorm, xi); }

  Vec3 coord_grad_norm_gradient(const Vec3& xi) const {
    return Vec3{interp(dgnorm[0], xi), interp(dgnorm[1], xi), interp(dgnorm[2], xi)};
  }

  // nodal second differences of u, centered where both neighbors carry
  // values, one-sided otherwise; these are the stencils of the operator rows
  Sym3 hess_node(int i, int j, int k) const {
    auto val = [&](int a, int b, int c) -> double {
      if (a < 0 || b < 0 || c < 0 || a >= n || b >= n || c >= n)
        return std::numeric_limits<double>::quiet_NaN();
      return u[idx(a, b, c)];
    };
    double c0 = val(i, j, k);
    int p[3] = {i, j, k};
    double dd[3];
    for (int a = 0; a < 3; ++a) {
      int q[3] = {i, j, k};
      q[a] = p[a] + 1;
      double up1 = val(q[0], q[1], q[2]);
      q[a] = p[a] - 1;
      double um1 = val(q[0], q[1], q[2]);
      dd[a] = (up1 - 2.0 * c0 + um1) / (h * h);
    }
    auto cross = [&](int a, int b) {
      int q[3];
      double acc = 0;
      for (int sa = -1; sa <= 1; sa += 2)
        for (int sb = -1; sb <= 1; sb += 2) {
          q[0] = i;
          q[1] = j;
          q[2] = k;
          q[a] += sa;
          q[b] += sb;
          acc += sa * sb * val(q[0], q[1], q[2]);
        }
      return acc / (4.0 * h * h);
    };
    return Sym3{dd[0], cross(0, 1), cross(0, 2), dd[1], cross(1, 2), dd[2]};
  }

  Sym3 coord_hessian(const Vec3& xi) const {
    if (!covers(xi)) throw std::domain_error("grid field queried outside the solved annulus");
    Cell c = locate(xi);
    Sym3 acc{0, 0, 0, 0, 0, 0};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) {
          double w = (a ? c.fx : 1.0 - c.fx) * (b ? c.fy : 1.0 - c.fy) * (d ? c.fz : 1.0 - c.fz);
          Sym3 hn = hess_node(c.i + a, c.j + b, c.k + d);
          acc.xx += w * hn.xx;
          acc.xy += w * hn.xy;
          acc.xz += w * hn.xz;
          acc.yy += w * hn.yy;
          acc.yz += w * hn.yz;
          acc.zz += w * hn.zz;
        }
    return acc;
  }
};

}  // namespace driftmass
