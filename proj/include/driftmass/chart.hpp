#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include "driftmass/jet.hpp"
#include "driftmass/vec.hpp"

namespace driftmass {

// A coordinate chart of an asymptotically flat 3-metric: g_ij as closures
// returning either plain values or Taylor jets at the queried point. Charts
// built from a generic formula get exact jets; data-only charts fall back to
// centered finite differences.

struct ChartTraits {
  double inner_radius = 0;    // chart valid on |x| >= inner_radius
  double boundary_radius = 0; // >0: manifold with inner boundary sphere |x| = r0
  double declared_tau = 1.0;  // decay order, must be > 1/2
  bool h2_spherical_free = true;  // declarative topology flag, never computed
  bool radial = false;        // spherically symmetric about the origin
};

struct Chart {
  std::string name;
  std::function<Sym3(const Vec3&)> value;
  std::function<JSym<1>(const Vec3&)> jet1;
  std::function<JSym<2>(const Vec3&)> jet2;
  std::function<JSym<4>(const Vec3&)> jet4;
  ChartTraits traits;

  double domain_min() const {
    return std::max(traits.inner_radius, traits.boundary_radius);
  }
};

namespace detail {

inline void check_domain(const Chart& ch, const Vec3& x) {
  double r = norm(x);
  if (r < ch.domain_min() * (1.0 - 1e-12))
    throw std::domain_error("chart '" + ch.name + "': point inside excluded ball, |x|=" +
                            std::to_string(r));
}

inline void check_spd(const Chart& ch, const Sym3& g, const Vec3& x) {
  if (!spd_minors(g))
    throw std::domain_error("chart '" + ch.name + "': metric not positive definite at (" +
                            std::to_string(x.x) + "," + std::to_string(x.y) + "," +
                            std::to_string(x.z) + ")");
}

}  // namespace detail

template <class F>
Chart make_chart(std::string name, F f, ChartTraits traits) {
  if (!(traits.declared_tau > 0.5))
    throw std::invalid_argument("chart decay order must exceed 1/2");
  Chart ch;
  ch.name = std::move(name);
  ch.traits = traits;
  ch.value = [f](const Vec3& p) { return f(p); };
  ch.jet1 = [f](const Vec3& p) { return f(jet_point<1>(p)); };
  ch.jet2 = [f](const Vec3& p) { return f(jet_point<2>(p)); };
  ch.jet4 = [f](const Vec3& p) { return f(jet_point<4>(p)); };
  return ch;
}

// finite-difference jets from a value-only metric closure; samples a 5^3 cube
template <int N, class F>
JSym<N> fd_sym_jet(F&& f, const Vec3& x, double h) {
  static_assert(N >= 1 && N <= 4);
  static const double W[5][5] = {
      {0, 0, 1, 0, 0},
      {1.0 / 12, -2.0 / 3, 0, 2.0 / 3, -1.0 / 12},
      {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12},
      {-0.5, 1, 0, -1, 0.5},
      {1, -4, 6, -4, 1}};
  std::array<Sym3, 125> samp;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      for (int d = 0; d < 5; ++d)
        samp[(a * 5 + b) * 5 + d] =
            f(Vec3{x.x + (a - 2) * h, x.y + (b - 2) * h, x.z + (d - 2) * h});
  const auto& t = Jet<N>::Tables::get();
  JSym<N> out;
  static const int ci[6] = {0, 0, 0, 1, 1, 2};
  static const int cj[6] = {0, 1, 2, 1, 2, 2};
  for (int comp = 0; comp < 6; ++comp) {
    Jet<N> jc;
    for (int s = 0; s < Jet<N>::size; ++s) {
      const auto& e = t.exps[s];
      double acc = 0;
      for (int a = 0; a < 5; ++a) {
        double wa = W[e[0]][a];
        if (wa == 0) continue;
        for (int b = 0; b < 5; ++b) {
          double wb = W[e[1]][b];
          if (wb == 0) continue;
          for (int d = 0; d < 5; ++d) {
            double wd = W[e[2]][d];
            if (wd == 0) continue;
            acc += wa * wb * wd * samp[(a * 5 + b) * 5 + d](ci[comp], cj[comp]);
          }
        }
      }
      int total = e[0] + e[1] + e[2];
      jc.c[s] = acc / std::pow(h, total) /
                (detail::kFactorial[e[0]] * detail::kFactorial[e[1]] * detail::kFactorial[e[2]]);
    }
    out(ci[comp], cj[comp]) = jc;
  }
  return out;
}

// step choice baseline: h = max(1e-4, 1e-3 |x|). High-order jets need a wider
// step or the 3rd/4th-derivative stencils drown in cancellation.
inline double fd_step(const Vec3& x, int order) {
  double h = std::max(1e-4, 1e-3 * norm(x));
  if (order >= 3) h = std::max(h, 5e-3);
  return h;
}

inline Chart make_chart_fd(std::string name, std::function<Sym3(const Vec3&)> f,
                           ChartTraits traits) {
  if (!(traits.declared_tau > 0.5))
    throw std::invalid_argument("chart decay order must exceed 1/2");
  Chart ch;
  ch.name = std::move(name);
  ch.traits = traits;
  ch.value = f;
  ch.jet1 = [f](const Vec3& p) { return fd_sym_jet<1>(f, p, fd_step(p, 1)); };
  ch.jet2 = [f](const Vec3& p) { return fd_sym_jet<2>(f, p, fd_step(p, 2)); };
  ch.jet4 = [f](const Vec3& p) { return fd_sym_jet<4>(f, p, fd_step(p, 4)); };
  return ch;
}

// checked accessors; everything downstream goes through these
inline Sym3 metric_value(const Chart& ch, const Vec3& x) {
  detail::check_domain(ch, x);
  Sym3 g = ch.value(x);
  detail::check_spd(ch, g, x);
  return g;
}

template <int N>
JSym<N> metric_jets(const Chart& ch, const Vec3& x) {
  detail::check_domain(ch, x);
  JSym<N> j;
  if constexpr (N == 1)
    j = ch.jet1(x);
  else if constexpr (N == 2)
    j = ch.jet2(x);
  else
    j = ch.jet4(x);
  Sym3 g0{j.xx.value(), j.xy.value(), j.xz.value(), j.yy.value(), j.yz.value(), j.zz.value()};
  detail::check_spd(ch, g0, x);
  return j;
}

// plain derivative tables up to order 4 (the flattened view of the jets)
struct MetricDerivs {
  int order = 0;
  double g[3][3]{};
  double d1[3][3][3]{};            // d1[a][i][j] = del_a g_ij
  double d2[3][3][3][3]{};         // d2[a][b][i][j]
  double d3[3][3][3][3][3]{};
  double d4[3][3][3][3][3][3]{};
};

inline MetricDerivs metric_jet(const Chart& ch, const Vec3& x, int order) {
  if (order < 0 || order > 4) throw std::invalid_argument("metric_jet: order must be 0..4");
  MetricDerivs out;
  out.order = order;
  auto fill_g = [&](auto const& jets) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out.g[i][j] = jets(i, j).value();
  };
  auto exps_of = [](int a, int b, int c, int d, int count) {
    std::array<int, 3> e{0, 0, 0};
    int idx[4] = {a, b, c, d};
    for (int t = 0; t < count; ++t) e[idx[t]]++;
    return e;
  };
  if (order <= 1) {
    auto jets = metric_jets<1>(ch, x);
    fill_g(jets);
    if (order >= 1)
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            auto e = exps_of(a, 0, 0, 0, 1);
            out.d1[a][i][j] = jets(i, j).deriv(e[0], e[1], e[2]);
          }
    return out;
  }
  if (order == 2) {
    auto jets = metric_jets<2>(ch, x);
    fill_g(jets);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          auto e1 = exps_of(a, 0, 0, 0, 1);
          out.d1[a][i][j] = jets(i, j).deriv(e1[0], e1[1], e1[2]);
          for (int b = 0; b < 3; ++b) {
            auto e2 = exps_of(a, b, 0, 0, 2);
            out.d2[a][b][i][j] = jets(i, j).deriv(e2[0], e2[1], e2[2]);
          }
        }
    return out;
  }
  auto jets = metric_jets<4>(ch, x);
  fill_g(jets);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 3; ++a) {
        auto e1 = exps_of(a, 0, 0, 0, 1);
        out.d1[a][i][j] = jets(i, j).deriv(e1[0], e1[1], e1[2]);
        for (int b = 0; b < 3; ++b) {
          auto e2 = exps_of(a, b, 0, 0, 2);
          out.d2[a][b][i][j] = jets(i, j).deriv(e2[0], e2[1], e2[2]);
          for (int c = 0; c < 3; ++c) {
            auto e3 = exps_of(a, b, c, 0, 3);
            out.d3[a][b][c][i][j] = jets(i, j).deriv(e3[0], e3[1], e3[2]);
            if (order >= 4)
              for (int d = 0; d < 3; ++d) {
                auto e4 = exps_of(a, b, c, d, 4);
                out.d4[a][b][c][d][i][j] = jets(i, j).deriv(e4[0], e4[1], e4[2]);
              }
          }
        }
      }
  return out;
}

}  // namespace driftmass
