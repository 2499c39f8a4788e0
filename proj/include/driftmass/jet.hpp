#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "driftmass/vec.hpp"

namespace driftmass {

// Truncated multivariate Taylor arithmetic in three variables ("jets").
// A Jet<N> holds the Taylor coefficients of a scalar function around a base
// point, for every monomial x^i y^j z^k with i+j+k <= N. Coefficient order:
// by total degree, then i descending, then j descending. Partial derivatives
// come out as coefficient times factorials.

namespace detail {

inline constexpr double kFactorial[9] = {1, 1, 2, 6, 24, 120, 720, 5040, 40320};

template <int N>
struct JetTables {
  static constexpr int size = (N + 1) * (N + 2) * (N + 3) / 6;
  std::array<std::array<int, 3>, size> exps{};
  std::array<int, size> deg{};
  std::array<int, (N + 1) * (N + 1) * (N + 1)> slot{};

  JetTables() {
    slot.fill(-1);
    int s = 0;
    for (int d = 0; d <= N; ++d)
      for (int i = d; i >= 0; --i)
        for (int j = d - i; j >= 0; --j) {
          int k = d - i - j;
          exps[s] = {i, j, k};
          deg[s] = d;
          slot[(i * (N + 1) + j) * (N + 1) + k] = s;
          ++s;
        }
  }

  int lookup(int i, int j, int k) const {
    return slot[(i * (N + 1) + j) * (N + 1) + k];
  }

  static const JetTables& get() {
    static const JetTables t;
    return t;
  }
};

}  // namespace detail

template <int N>
class Jet {
 public:
  static_assert(N >= 0 && N <= 6, "jet order out of range");
  static constexpr int order = N;
  static constexpr int size = (N + 1) * (N + 2) * (N + 3) / 6;
  using Tables = detail::JetTables<N>;

  std::array<double, size> c{};

  Jet() = default;
  Jet(double v) { c[0] = v; }  // implicit: doubles promote to constant jets

  static Jet variable(double v, int axis) {
    static_assert(N >= 1, "variables need order >= 1");
    Jet j;
    j.c[0] = v;
    j.c[1 + axis] = 1.0;
    return j;
  }

  double value() const { return c[0]; }

  // partial derivative d^{i+j+k} f / dx^i dy^j dz^k at the base point
  double deriv(int i, int j, int k) const {
    int s = Tables::get().lookup(i, j, k);
    if (s < 0) throw std::out_of_range("jet derivative order exceeds N");
    return c[s] * detail::kFactorial[i] * detail::kFactorial[j] * detail::kFactorial[k];
  }

  Jet& operator+=(const Jet& o) {
    for (int s = 0; s < size; ++s) c[s] += o.c[s];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int s = 0; s < size; ++s) c[s] -= o.c[s];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(const Jet& a) {
    Jet r;
    for (int s = 0; s < size; ++s) r.c[s] = -a.c[s];
    return r;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const auto& t = Tables::get();
    Jet r;
    for (int s1 = 0; s1 < size; ++s1) {
      double a1 = a.c[s1];
      if (a1 == 0.0) continue;
      const auto& e1 = t.exps[s1];
      int dmax = N - t.deg[s1];
      for (int s2 = 0; s2 < size && t.deg[s2] <= dmax; ++s2) {
        double b2 = b.c[s2];
        if (b2 == 0.0) continue;
        const auto& e2 = t.exps[s2];
        r.c[t.lookup(e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])] += a1 * b2;
      }
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  // f(g) for univariate f given the list f(g0), f'(g0), ..., f^{(N)}(g0)
  static Jet compose_series(const std::array<double, N + 1>& fd, const Jet& g) {
    Jet p = g;
    p.c[0] = 0.0;  // the small part g - g0
    Jet h(fd[N] / detail::kFactorial[N]);
    for (int m = N - 1; m >= 0; --m) {
      h = h * p;
      h.c[0] += fd[m] / detail::kFactorial[m];
    }
    return h;
  }

  friend Jet exp(const Jet& g) {
    std::array<double, N + 1> fd;
    double e = std::exp(g.value());
    fd.fill(e);
    return compose_series(fd, g);
  }

  friend Jet log(const Jet& g) {
    double a = g.value();
    if (a <= 0) throw std::domain_error("jet log of non-positive value");
    std::array<double, N + 1> fd;
    fd[0] = std::log(a);
    if constexpr (N >= 1) {
      fd[1] = 1.0 / a;
      for (int m = 2; m <= N; ++m) fd[m] = fd[m - 1] * (-(m - 1)) / a;
    }
    return compose_series(fd, g);
  }

  friend Jet reciprocal(const Jet& g) {
    double a = g.value();
    if (a == 0) throw std::domain_error("jet reciprocal of zero");
    std::array<double, N + 1> fd;
    fd[0] = 1.0 / a;
    for (int m = 1; m <= N; ++m) fd[m] = fd[m - 1] * (-m) / a;
    return compose_series(fd, g);
  }

  // real exponent; base value must be positive
  friend Jet pow(const Jet& g, double alpha) {
    double a = g.value();
    if (a <= 0) throw std::domain_error("jet pow needs positive base");
    std::array<double, N + 1> fd;
    fd[0] = std::pow(a, alpha);
    for (int m = 1; m <= N; ++m) fd[m] = fd[m - 1] * (alpha - (m - 1)) / a;
    return compose_series(fd, g);
  }

  friend Jet sqrt(const Jet& g) { return pow(g, 0.5); }
};

// double overload so generic formulas compile at T = double
inline double reciprocal(double x) { return 1.0 / x; }

// scalar value of plain doubles and jets alike; lets preset formulas branch
// on coordinates inside generic lambdas
inline double value_of(double x) { return x; }
template <int N>
double value_of(const Jet<N>& x) {
  return x.value();
}

template <int M, int N>
Jet<M> jet_cast(const Jet<N>& f) {
  Jet<M> r;
  constexpr int n = std::min(Jet<M>::size, Jet<N>::size);
  for (int s = 0; s < n; ++s) r.c[s] = f.c[s];  // slot order shares a prefix
  return r;
}

template <int N>
Jet<N> homogeneous_part(const Jet<N>& f, int d) {
  const auto& t = Jet<N>::Tables::get();
  Jet<N> r;
  for (int s = 0; s < Jet<N>::size; ++s)
    if (t.deg[s] == d) r.c[s] = f.c[s];
  return r;
}

// d/dx_axis as a jet one order lower
template <int N>
Jet<N - 1> deriv_jet(const Jet<N>& f, int axis) {
  static_assert(N >= 1);
  const auto& tn = Jet<N>::Tables::get();
  const auto& tm = Jet<N - 1>::Tables::get();
  Jet<N - 1> r;
  for (int s = 0; s < Jet<N - 1>::size; ++s) {
    auto e = tm.exps[s];
    e[axis] += 1;
    r.c[s] = f.c[tn.lookup(e[0], e[1], e[2])] * e[axis];
  }
  return r;
}

// polynomial evaluation of the truncated series at displacement d
template <int N>
double eval(const Jet<N>& f, const Vec3& d) {
  double px[N + 1], py[N + 1], pz[N + 1];
  px[0] = py[0] = pz[0] = 1.0;
  for (int a = 1; a <= N; ++a) {
    px[a] = px[a - 1] * d.x;
    py[a] = py[a - 1] * d.y;
    pz[a] = pz[a - 1] * d.z;
  }
  const auto& t = Jet<N>::Tables::get();
  double s = 0;
  for (int i = 0; i < Jet<N>::size; ++i) {
    const auto& e = t.exps[i];
    s += f.c[i] * px[e[0]] * py[e[1]] * pz[e[2]];
  }
  return s;
}

// multivariate composition f(u,v,w); inner jets must have zero constant term
template <int M, int N>
Jet<N> compose3(const Jet<M>& f, const Vec3t<Jet<N>>& inner) {
  for (int a = 0; a < 3; ++a)
    if (inner[a].value() != 0.0)
      throw std::invalid_argument("compose3: inner jets must be centered");
  std::array<Jet<N>, M + 1> pu, pv, pw;
  pu[0] = Jet<N>(1.0);
  pv[0] = Jet<N>(1.0);
  pw[0] = Jet<N>(1.0);
  for (int a = 1; a <= M; ++a) {
    pu[a] = pu[a - 1] * inner.x;
    pv[a] = pv[a - 1] * inner.y;
    pw[a] = pw[a - 1] * inner.z;
  }
  const auto& t = Jet<M>::Tables::get();
  Jet<N> r;
  for (int s = 0; s < Jet<M>::size; ++s) {
    double fs = f.c[s];
    if (fs == 0.0) continue;
    const auto& e = t.exps[s];
    Jet<N> term = pu[e[0]] * pv[e[1]] * pw[e[2]];
    term *= fs;
    r += term;
  }
  return r;
}

// jet-valued coordinates of a point, seeded as the three variables
template <int N>
Vec3t<Jet<N>> jet_point(const Vec3& x) {
  return {Jet<N>::variable(x.x, 0), Jet<N>::variable(x.y, 1), Jet<N>::variable(x.z, 2)};
}

// centered finite-difference jet of a scalar field, 5-point stencils per axis.
// First and second derivatives are 4th-order accurate, third and fourth 2nd-order.
template <int N, class F>
Jet<N> fd_jet(F&& f, const Vec3& x, double h) {
  static_assert(N >= 1 && N <= 4);
  static const double W[5][5] = {
      {0, 0, 1, 0, 0},
      {1.0 / 12, -2.0 / 3, 0, 2.0 / 3, -1.0 / 12},
      {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12},
      {-0.5, 1, 0, -1, 0.5},
      {1, -4, 6, -4, 1}};
  double samp[5][5][5];
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      for (int d = 0; d < 5; ++d)
        samp[a][b][d] = f(Vec3{x.x + (a - 2) * h, x.y + (b - 2) * h, x.z + (d - 2) * h});
  const auto& t = Jet<N>::Tables::get();
  Jet<N> r;
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
          acc += wa * wb * wd * samp[a][b][d];
        }
      }
    }
    int total = e[0] + e[1] + e[2];
    r.c[s] = acc / std::pow(h, total) /
             (detail::kFactorial[e[0]] * detail::kFactorial[e[1]] * detail::kFactorial[e[2]]);
  }
  return r;
}

template <int N>
using JVec = Vec3t<Jet<N>>;
template <int N>
using JSym = Sym3t<Jet<N>>;

}  // namespace driftmass
