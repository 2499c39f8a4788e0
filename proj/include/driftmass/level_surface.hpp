#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/grid_field.hpp"
#include "driftmass/potential.hpp"
#include "driftmass/sphere_quadrature.hpp"

namespace driftmass {

// Level sets {u = 1 - 1/t} and their induced geometry. A radial
// representation collapses each level to a coordinate sphere located by
// root-finding on the profile; per-element data then comes straight from the
// metric at that radius. A grid representation is triangulated by marching
// tetrahedra over the sample cubes, with per-triangle geometry induced by g.

struct SurfaceElement {
  Vec3 position;
  Vec3 normal;              // grad u / |grad u|, unit length in g
  double weight = 0;        // induced area weight
  double grad_norm = 0;     // |grad u| in g
  double mean_curv = 0;     // H with respect to normal (pointing to infinity)
  double drift_normal = 0;  // g(X, normal)
  double traceless_sq = 0;  // |ring h|^2; exact (zero) on radial charts
};

struct LevelSurface {
  double t = 0;
  double level = 0;   // 1 - 1/t
  double radius = 0;  // radial charts: coordinate radius of the sphere
  std::vector<SurfaceElement> elements;
  double total_area = 0;
  double min_grad = 0;
  bool is_regular = false;     // min |grad u| above the potential's threshold
  bool has_traceless = false;  // traceless_sq fields are meaningful
  int connected_components = 0;
};

// coordinate radius of {u = 1 - 1/t} on a radial profile, Newton with a
// bisection fence; the profile is strictly increasing so the bracket holds
inline double level_radius(const PotentialField& pot, double t) {
  if (!(t > 0)) throw std::invalid_argument("level parameter t must be positive");
  if (pot.rep != PotentialRep::radial_profile)
    throw std::logic_error("level_radius needs a radial representation");
  const RadialProfile& pr = pot.radial;
  double s = 1.0 - 1.0 / t;
  if (s < pr.u.front()) {
    if (!pot.has_pole) throw std::domain_error("level intersects the inner boundary");
    throw std::domain_error("level below the solved range of the potential");
  }
  if (s > pr.u.back()) throw std::domain_error("level above the solved range of the potential");
  size_t hi = size_t(std::upper_bound(pr.u.begin(), pr.u.end(), s) - pr.u.begin());
  if (hi == 0) return pr.r.front();
  if (hi >= pr.u.size()) return pr.r.back();
  double lo = pr.r[hi - 1], up = pr.r[hi];
  double x = 0.5 * (lo + up);
  for (int it = 0; it < 80; ++it) {
    double f = pr.value(x) - s;
    if (f > 0)
      up = x;
    else
      lo = x;
    double d = pr.deriv(x);
    double xn = (d > 0) ? x - f / d : 0.5 * (lo + up);
    if (!(xn > lo && xn < up)) xn = 0.5 * (lo + up);
    if (std::abs(xn - x) <= 1e-15 * x) return xn;
    x = xn;
  }
  return x;
}

namespace detail {

inline void require_radial_pair(const Chart& ch, const DriftField& X, const char* who) {
  if (!ch.traits.radial || !(X.zero || X.radial))
    throw std::invalid_argument(std::string(who) +
                                ": chart and drift must be rotationally symmetric");
}

// union-find over isosurface vertices, keyed by the tetrahedron edge they
// interpolate; the Kuhn split triangulates space consistently, so shared
// edges get shared keys across neighboring cubes
struct EdgeDsu {
  std::unordered_map<uint64_t, int> ids;
  std::vector<int> parent;

  int intern(uint64_t key) {
    auto [it, fresh] = ids.try_emplace(key, int(parent.size()));
    if (fresh) parent.push_back(it->second);
    return it->second;
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  int components() {
    int c = 0;
    for (int i = 0; i < int(parent.size()); ++i)
      if (find(i) == i) ++c;
    return c;
  }
};

inline LevelSurface extract_level_grid(const PotentialField& pot, const Chart& ch,
                                       const DriftField& X, double t) {
  const GridData& gd = *pot.grid;
  const int n = gd.n;
  const double s = 1.0 - 1.0 / t;

  LevelSurface out;
  out.t = t;
  out.level = s;

  // corner offsets of a cube, bit per axis
  auto corner = [&](size_t p, int mask) {
    return p + (mask & 4 ? gd.idx(1, 0, 0) : 0) + (mask & 2 ? gd.idx(0, 1, 0) : 0) +
           (mask & 1 ? 1 : 0);
  };
  static const int perms[6][3] = {{4, 2, 1}, {4, 1, 2}, {2, 4, 1},
                                  {2, 1, 4}, {1, 4, 2}, {1, 2, 4}};

  EdgeDsu dsu;
  const uint64_t nn = uint64_t(n) * n * n;
  double min_grad = std::numeric_limits<double>::infinity();
  double area = 0, rad_acc = 0;
  bool clipped = false;

  struct Vtx {
    Vec3 pos;
    int id;
  };
  auto cut = [&](size_t pa, size_t pb) {
    double fa = gd.u[pa], fb = gd.u[pb];
    double th = (s - fa) / (fb - fa);
    th = std::min(1.0, std::max(0.0, th));
    Vec3 a = gd.node_of(pa), b = gd.node_of(pb);
    uint64_t key = (pa < pb) ? pa * nn + pb : pb * nn + pa;
    return Vtx{a + th * (b - a), dsu.intern(key)};
  };

  auto emit = [&](const Vtx& v0, const Vtx& v1, const Vtx& v2) {
    dsu.unite(v0.id, v1.id);
    dsu.unite(v0.id, v2.id);
    Vec3 cen = (1.0 / 3.0) * (v0.pos + v1.pos + v2.pos);
    Sym3 g = metric_value(ch, cen);
    Vec3 e1 = v1.pos - v0.pos, e2 = v2.pos - v0.pos;
    auto gdot = [&](const Vec3& a, const Vec3& b) {
      double acc = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) acc += g(i, j) * a[i] * b[j];
      return acc;
    };
    double gram = gdot(e1, e1) * gdot(e2, e2) - gdot(e1, e2) * gdot(e1, e2);
    double wt = 0.5 * std::sqrt(std::max(0.0, gram));
    if (!(wt > 0)) return;

    SurfaceElement el;
    el.position = cen;
    el.weight = wt;
    Vec3 du = gd.coord_gradient(cen);
    double w = gd.grad_norm_g(cen);
    el.grad_norm = w;
    Sym3 gi = inverse(g);
    for (int i = 0; i < 3; ++i)
      el.normal[i] = (gi(i, 0) * du[0] + gi(i, 1) * du[1] + gi(i, 2) * du[2]) / w;
    Vec3 dP = gd.coord_grad_norm_gradient(cen);
    double gPu = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) gPu += gi(i, j) * dP[i] * du[j];
    double xu = 0;
    if (!X.zero) xu = dot(X.value(cen), du);
    el.mean_curv = 0.5 * xu / w - gPu / (w * w);
    el.drift_normal = xu / w;
    el.traceless_sq = 0;

    min_grad = std::min(min_grad, w);
    area += wt;
    rad_acc += wt * norm(cen - pot.pole);
    out.elements.push_back(el);
  };

  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j)
      for (int k = 0; k + 1 < n; ++k) {
        size_t base = gd.idx(i, j, k);
        int below = 0, above = 0, bad = 0;
        for (int msk = 0; msk < 8; ++msk) {
          double f = gd.u[corner(base, msk)];
          if (!std::isfinite(f))
            ++bad;
          else if (f < s)
            ++below;
          else
            ++above;
        }
        if (below == 0 || above == 0) continue;  // includes all-NaN cubes
        if (bad) {
          clipped = true;
          continue;
        }
        for (const auto& pm : perms) {
          size_t tet[4];
          tet[0] = corner(base, 0);
          tet[1] = corner(base, pm[0]);
          tet[2] = corner(base, pm[0] | pm[1]);
          tet[3] = corner(base, 7);
          int lo[4], nlo = 0, hi[4], nhi = 0;
          for (int v = 0; v < 4; ++v) {
            if (gd.u[tet[v]] < s)
              lo[nlo++] = v;
            else
              hi[nhi++] = v;
          }
          if (nlo == 0 || nhi == 0) continue;
          if (nlo == 1 || nhi == 1) {
            int a = (nlo == 1) ? lo[0] : hi[0];
            const int* rest = (nlo == 1) ? hi : lo;
            emit(cut(tet[a], tet[rest[0]]), cut(tet[a], tet[rest[1]]),
                 cut(tet[a], tet[rest[2]]));
          } else {
            Vtx q0 = cut(tet[lo[0]], tet[hi[0]]);
            Vtx q1 = cut(tet[lo[0]], tet[hi[1]]);
            Vtx q2 = cut(tet[lo[1]], tet[hi[1]]);
            Vtx q3 = cut(tet[lo[1]], tet[hi[0]]);
            emit(q0, q1, q2);
            emit(q0, q2, q3);
          }
        }
      }

  if (clipped)
    throw std::domain_error("level surface is clipped by the solved annulus");
  if (out.elements.empty())
    throw std::domain_error("level outside the solved range of the potential");

  out.total_area = area;
  out.radius = rad_acc / area;
  out.min_grad = min_grad;
  out.is_regular = min_grad >= pot.regular_threshold;
  out.has_traceless = false;  // second fundamental form is not assembled on grids
  out.connected_components = dsu.components();
  return out;
}

}  // namespace detail

inline LevelSurface extract_level(const PotentialField& pot, const Chart& ch,
                                  const DriftField& X, double t,
                                  const SphereQuadrature* quad = nullptr) {
  if (!(t > 0)) throw std::invalid_argument("level parameter t must be positive");
  if (pot.rep == PotentialRep::grid_samples) {
    if (!pot.grid) throw std::logic_error("grid representation carries no samples");
    return detail::extract_level_grid(pot, ch, X, t);
  }
  if (pot.rep != PotentialRep::radial_profile)
    throw std::logic_error("level extraction needs a radial or grid representation");
  detail::require_radial_pair(ch, X, "extract_level");

  LevelSurface out;
  out.t = t;
  out.level = 1.0 - 1.0 / t;
  double rr = level_radius(pot, t);
  out.radius = rr;

  SphereQuadrature local;
  if (!quad) {
    local = make_sphere_quadrature();
    quad = &local;
  }

  // one radius serves every direction: the radial trait fixes the metric as
  // alpha(r) dr^2 + beta(r) r^2 dOmega^2
  auto jets = metric_jets<1>(ch, Vec3{rr, 0, 0});
  double al = jets.xx.value();
  double be = jets.yy.value();
  double dbe = jets.yy.deriv(1, 0, 0);
  double sal = std::sqrt(al);

  double w = pot.radial.deriv(rr) / sal;      // |grad u|
  double hh = (dbe / be + 2.0 / rr) / sal;    // sphere mean curvature from the metric
  double chi = X.zero ? 0.0 : X.value(Vec3{rr, 0, 0}).x;
  double xnu = sal * chi;                     // g(X, nu)
  double aw = be * rr * rr;                   // induced area per unit solid angle

  out.elements.reserve(quad->nodes.size());
  double area = 0;
  for (const auto& n : quad->nodes) {
    SurfaceElement el;
    el.position = pot.pole + rr * n.dir;
    el.normal = (1.0 / sal) * n.dir;
    el.weight = aw * n.w;
    el.grad_norm = w;
    el.mean_curv = hh;
    el.drift_normal = xnu;
    el.traceless_sq = 0;  // coordinate spheres in a radial chart are umbilic
    area += el.weight;
    out.elements.push_back(el);
  }
  out.total_area = area;
  out.min_grad = w;
  out.is_regular = w >= pot.regular_threshold;
  out.has_traceless = true;
  out.connected_components = 1;
  return out;
}

// Mean curvature through the equation route: the drift equation replaces
// Delta u, leaving H = g(X, grad u)/(2|grad u|) - g(grad|grad u|, grad u)/|grad u|^2.
// Runs on profile derivatives alone, so agreement with the metric formula
// used by extract_level is a statement about the solved potential, not an
// identity of the code.
inline double mean_curvature(const PotentialField& pot, const Chart& ch, const DriftField& X,
                             const Vec3& x) {
  if (pot.rep == PotentialRep::grid_samples) {
    if (!pot.grid) throw std::logic_error("grid representation carries no samples");
    const GridData& gd = *pot.grid;
    double w = gd.grad_norm_g(x - pot.pole);
    if (w < pot.regular_threshold)
      throw std::domain_error("mean curvature queried below the regularity threshold");
    Vec3 du = gd.coord_gradient(x - pot.pole);
    Vec3 dP = gd.coord_grad_norm_gradient(x - pot.pole);
    Sym3 gi = inverse(metric_value(ch, x));
    double gPu = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) gPu += gi(i, j) * dP[i] * du[j];
    double xu = X.zero ? 0.0 : dot(X.value(x), du);
    return 0.5 * xu / w - gPu / (w * w);
  }
  if (pot.rep != PotentialRep::radial_profile)
    throw std::logic_error("mean curvature needs a radial or grid representation");
  detail::require_radial_pair(ch, X, "mean_curvature");
  double rr = norm(x - pot.pole);
  auto jets = metric_jets<1>(ch, Vec3{rr, 0, 0});
  double al = jets.xx.value();
  double dal = jets.xx.deriv(1, 0, 0);
  double sal = std::sqrt(al);
  double up = pot.radial.deriv(rr);
  double w = up / sal;
  if (w < pot.regular_threshold)
    throw std::domain_error("mean curvature queried below the regularity threshold");
  double upp = pot.radial.second_deriv(rr);
  double wp = upp / sal - up * dal / (2.0 * al * sal);
  double chi = X.zero ? 0.0 : X.value(Vec3{rr, 0, 0}).x;
  return 0.5 * chi * sal - wp / up;
}

}  // namespace driftmass
