#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/jet.hpp"
#include "driftmass/vec.hpp"

namespace driftmass {

// Geodesic normal coordinates at a chart point, as truncated series. The
// chart map xi -> x is built degree by degree from the geodesic equation:
// writing the displacement F(xi) = sum_m F_m with F_m homogeneous of degree m
// and requiring t -> F(t v) to be a geodesic for every v gives
//   m (m - 1) F_m = -[Gamma^k_ij(F) (E F^i)(E F^j)]_m,
// where E is the degree-scaling (Euler) operator. Everything downstream
// consumes the pulled-back jets this struct carries.

struct NormalJets {
  Vec3 pole;
  Mat3 frame;                                  // columns: g-orthonormal frame at the pole
  JVec<5> chart_map;                           // chart displacement of exp_o(xi)
  JSym<4> metric;                              // pullback metric components
  JSym<4> metric_inv;
  std::array<Sym3t<Jet<3>>, 3> christoffel;    // christoffel[k](i,j)
  JVec<3> drift;
  double gauge_residual = 0;                   // max |d g(0)| in normal coords
};

namespace detail {

template <int N>
std::array<Sym3t<Jet<N>>, 3> christoffel_jets(const JSym<N + 1>& gj) {
  std::array<JSym<N>, 3> dg;  // dg[a](i,j) = d_a g_ij
  Sym3t<Jet<N>> gl;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      for (int a = 0; a < 3; ++a) dg[a](i, j) = deriv_jet(gj(i, j), a);
      gl(i, j) = jet_cast<N>(gj(i, j));
    }
  Sym3t<Jet<N>> gi = inverse(gl);
  std::array<Sym3t<Jet<N>>, 3> gam;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        Jet<N> acc(0.0);
        for (int l = 0; l < 3; ++l) acc += gi(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        acc *= 0.5;
        gam[k](i, j) = acc;
      }
  return gam;
}

template <int N>
Jet<N> degree_scale(const Jet<N>& f) {
  const auto& t = Jet<N>::Tables::get();
  Jet<N> out = f;
  for (int s = 0; s < Jet<N>::size; ++s) out.c[s] *= t.deg[s];
  return out;
}

}  // namespace detail

inline NormalJets normal_jets(const Chart& ch, const DriftField& X, const Vec3& o) {
  NormalJets nj;
  nj.pole = o;

  JSym<4> gj = metric_jets<4>(ch, o);
  Sym3 g0;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) g0(i, j) = gj(i, j).value();
  Mat3 L;
  if (!cholesky_lower(g0, L)) throw std::domain_error("metric not positive definite at the pole");
  nj.frame = transpose(inverse(L));  // E^T g E = id

  // geodesic map, degrees 1 through 5
  auto gam4 = detail::christoffel_jets<3>(gj);
  JVec<5>& F = nj.chart_map;
  for (int i = 0; i < 3; ++i) {
    F[i] = Jet<5>(0.0);
    for (int a = 0; a < 3; ++a) F[i].c[1 + a] = nj.frame.a[i][a];
  }
  for (int m = 2; m <= 5; ++m) {
    JVec<5> eF{detail::degree_scale(F.x), detail::degree_scale(F.y), detail::degree_scale(F.z)};
    for (int k = 0; k < 3; ++k) {
      Jet<5> T(0.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          Jet<5> gk = compose3(gam4[k](i, j), F);
          T += gk * eF[i] * eF[j];
        }
      Jet<5> part = homogeneous_part(T, m);
      part *= -1.0 / (m * (m - 1));
      F[k] += part;
    }
  }

  // pullback of the metric, g~_ab = g_ij(F) dF^i/dxi^a dF^j/dxi^b
  JVec<4> F4{jet_cast<4>(F.x), jet_cast<4>(F.y), jet_cast<4>(F.z)};
  Jet<4> dF[3][3];
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) dF[i][a] = deriv_jet(F[i], a);
  Jet<4> gF[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) gF[j][i] = gF[i][j] = compose3(gj(i, j), F4);
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      Jet<4> acc(0.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) acc += gF[i][j] * dF[i][a] * dF[j][b];
      nj.metric(a, b) = acc;
    }

  // normal-coordinate gauge checks: identity value, vanishing first derivatives
  double res = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      double want = a == b ? 1.0 : 0.0;
      if (std::abs(nj.metric(a, b).value() - want) > 1e-9)
        throw std::runtime_error("normal frame did not normalize the metric");
      for (int c = 0; c < 3; ++c) res = std::max(res, std::abs(nj.metric(a, b).deriv(c == 0, c == 1, c == 2)));
    }
  nj.gauge_residual = res;
  if (res > 1e-7) throw std::runtime_error("normal coordinates kept first metric derivatives");

  nj.metric_inv = inverse(nj.metric);
  nj.christoffel = detail::christoffel_jets<3>(nj.metric);

  // drift components: X~^a = (dF)^{-1 a}_i X^i(F)
  JVec<3> xo = X.jet3(o);
  JVec<3> F3{jet_cast<3>(F.x), jet_cast<3>(F.y), jet_cast<3>(F.z)};
  Mat3t<Jet<3>> J;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) J.a[i][a] = jet_cast<3>(dF[i][a]);
  Mat3t<Jet<3>> Jinv = inverse(J);
  JVec<3> xF{compose3(xo.x, F3), compose3(xo.y, F3), compose3(xo.z, F3)};
  for (int a = 0; a < 3; ++a) {
    Jet<3> acc(0.0);
    for (int i = 0; i < 3; ++i) acc += Jinv.a[a][i] * xF[i];
    nj.drift[a] = acc;
  }
  return nj;
}

// chart point of a normal coordinate triple
inline Vec3 chart_point(const NormalJets& nj, const Vec3& xi) {
  return nj.pole + Vec3{eval(nj.chart_map.x, xi), eval(nj.chart_map.y, xi), eval(nj.chart_map.z, xi)};
}

// Newton inversion of the chart map; valid near the pole
inline Vec3 normal_point(const NormalJets& nj, const Vec3& x) {
  Vec3 rhs = x - nj.pole;
  Vec3 xi = mul(inverse(nj.frame), rhs);
  for (int it = 0; it < 50; ++it) {
    Vec3 fx{eval(nj.chart_map.x, xi), eval(nj.chart_map.y, xi), eval(nj.chart_map.z, xi)};
    Vec3 r = fx - rhs;
    if (norm(r) < 1e-14 * (1.0 + norm(rhs))) return xi;
    Mat3 J;
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a) J.a[i][a] = eval(deriv_jet(nj.chart_map[i], a), xi);
    xi = xi - solve3(J, r);
  }
  throw std::runtime_error("normal coordinate inversion did not converge");
}

}  // namespace driftmass
