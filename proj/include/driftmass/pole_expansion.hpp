#pragma once

#include <array>
#include <cmath>

#include "driftmass/normal_coordinates.hpp"
#include "driftmass/tensor.hpp"

namespace driftmass {

// Coefficient tables of the truncated singular series w for 4 pi G near the
// pole, in the normal-coordinate frame:
//   w = 1/|x| + b0_i x^i/|x|
//     + |x|   ( a1 + c1_ij m^i m^j + e1_ijkl m^i..m^l )
//     + |x|^2 ( b2_i m^i + d2_ijk m^i m^j m^k + f2_ijklm m^i..m^m )
//     + |x|^3 ( a3 + c3 m m + e3 m^4 + h3 m^6 + l3 m^8 ),   m = x/|x|.
// The tables are chosen so that L_X w extends C^1 across the pole; they are
// produced by a fixed recursion (b0, e1, c1, a1, f2, d2, b2, l3, h3, e3, c3,
// a3) whose inputs are the normal-coordinate jets of the inverse metric
// (orders 2..4), the Christoffel symbols (orders 1..3) and the drift
// (orders 0..3).
struct PoleExpansion {
  Vec3 pole;
  Mat3 frame;
  int truncation_order = 3;

  Vec3 b0{0, 0, 0};
  double a1 = 0;
  Tensor<2> c1;
  Tensor<4> e1;
  Vec3 b2{0, 0, 0};
  Tensor<3> d2;
  Tensor<5> f2;
  double a3 = 0;
  Tensor<2> c3;
  Tensor<4> e3;
  Tensor<6> h3;
  Tensor<8> l3;

  // truncated series at a normal-coordinate point; templated so jets ride
  // through for derivative evaluation
  template <class T>
  T series(const Vec3t<T>& xi) const {
    T s2 = xi.x * xi.x + xi.y * xi.y + xi.z * xi.z;
    T s = sqrt(s2);
    T is = reciprocal(s);
    Vec3t<T> mu{xi.x * is, xi.y * is, xi.z * is};
    T w = is;
    w += T(b0.x) * mu.x + T(b0.y) * mu.y + T(b0.z) * mu.z;
    w += s * (T(a1) + contract(c1, mu) + contract(e1, mu));
    w += s2 * (T(b2.x) * mu.x + T(b2.y) * mu.y + T(b2.z) * mu.z + contract(d2, mu) + contract(f2, mu));
    w += s2 * s * (T(a3) + contract(c3, mu) + contract(e3, mu) + contract(h3, mu) + contract(l3, mu));
    return w;
  }
  double evaluate(const Vec3& xi) const { return series<double>(xi); }
  // the series minus its 1/|x| lead; stays bounded at the pole
  double evaluate_smooth(const Vec3& xi) const {
    double s = norm(xi);
    return evaluate(xi) - 1.0 / s;
  }
  double max_table_entry() const {
    double m = std::max({std::abs(a1), std::abs(a3), norm(b0), norm(b2)});
    m = std::max({m, c1.max_abs(), e1.max_abs(), d2.max_abs(), f2.max_abs()});
    return std::max({m, c3.max_abs(), e3.max_abs(), h3.max_abs(), l3.max_abs()});
  }
};

inline PoleExpansion pole_expansion(const NormalJets& nj) {
  // derivative arrays at the origin of the normal chart
  double X0[3], dX[3][3], d2X[3][3][3], d3X[3][3][3][3];
  for (int i = 0; i < 3; ++i) {
    X0[i] = nj.drift[i].value();
    for (int a = 0; a < 3; ++a) {
      int ea[3] = {0, 0, 0};
      ea[a]++;
      dX[a][i] = nj.drift[i].deriv(ea[0], ea[1], ea[2]);
      for (int b = 0; b < 3; ++b) {
        int eb[3] = {ea[0], ea[1], ea[2]};
        eb[b]++;
        d2X[a][b][i] = nj.drift[i].deriv(eb[0], eb[1], eb[2]);
        for (int c = 0; c < 3; ++c) {
          int ec[3] = {eb[0], eb[1], eb[2]};
          ec[c]++;
          d3X[a][b][c][i] = nj.drift[i].deriv(ec[0], ec[1], ec[2]);
        }
      }
    }
  }
  double gi2[3][3][3][3], gi3[3][3][3][3][3], gi4[3][3][3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          int e2[3] = {0, 0, 0};
          e2[a]++;
          e2[b]++;
          gi2[a][b][i][j] = nj.metric_inv(i, j).deriv(e2[0], e2[1], e2[2]);
          for (int c = 0; c < 3; ++c) {
            int e3c[3] = {e2[0], e2[1], e2[2]};
            e3c[c]++;
            gi3[a][b][c][i][j] = nj.metric_inv(i, j).deriv(e3c[0], e3c[1], e3c[2]);
            for (int d = 0; d < 3; ++d) {
              int e4[3] = {e3c[0], e3c[1], e3c[2]};
              e4[d]++;
              gi4[a][b][c][d][i][j] = nj.metric_inv(i, j).deriv(e4[0], e4[1], e4[2]);
            }
          }
        }
  double dG[3][3][3][3], d2G[3][3][3][3][3], d3G[3][3][3][3][3][3];
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a) {
          int ea[3] = {0, 0, 0};
          ea[a]++;
          dG[a][k][i][j] = nj.christoffel[k](i, j).deriv(ea[0], ea[1], ea[2]);
          for (int b = 0; b < 3; ++b) {
            int eb[3] = {ea[0], ea[1], ea[2]};
            eb[b]++;
            d2G[a][b][k][i][j] = nj.christoffel[k](i, j).deriv(eb[0], eb[1], eb[2]);
            for (int c = 0; c < 3; ++c) {
              int ec[3] = {eb[0], eb[1], eb[2]};
              ec[c]++;
              d3G[a][b][c][k][i][j] = nj.christoffel[k](i, j).deriv(ec[0], ec[1], ec[2]);
            }
          }
        }

  // contractions that recur below
  auto trG1 = [&](int a, int k) {  // sum_i d_a Gamma^k_ii
    return dG[a][k][0][0] + dG[a][k][1][1] + dG[a][k][2][2];
  };
  auto trG2 = [&](int a, int b, int k) {
    return d2G[a][b][k][0][0] + d2G[a][b][k][1][1] + d2G[a][b][k][2][2];
  };
  auto trG3 = [&](int a, int b, int c, int k) {
    return d3G[a][b][c][k][0][0] + d3G[a][b][c][k][1][1] + d3G[a][b][c][k][2][2];
  };
  auto trg2 = [&](int a, int b) {  // sum_i d_a d_b g^ii
    return gi2[a][b][0][0] + gi2[a][b][1][1] + gi2[a][b][2][2];
  };
  auto trg3 = [&](int a, int b, int c) {
    return gi3[a][b][c][0][0] + gi3[a][b][c][1][1] + gi3[a][b][c][2][2];
  };
  auto trg4 = [&](int a, int b, int c, int d) {
    return gi4[a][b][c][d][0][0] + gi4[a][b][c][d][1][1] + gi4[a][b][c][d][2][2];
  };

  PoleExpansion pe;
  pe.pole = nj.pole;
  pe.frame = nj.frame;
  const Vec3 Xo{X0[0], X0[1], X0[2]};

  // source tensors from the expansion of L_X applied to each singular block
  Tensor<2> hatA;
  Tensor<4> hatB;
  Tensor<3> hatC;
  Tensor<5> hatD;
  Tensor<4> hatE;
  Tensor<6> hatF;
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2) {
      hatA(i1, i2) = 0.5 * (dX[i1][i2] + 2.0 * trG1(i1, i2) - trg2(i1, i2));
      for (int i3 = 0; i3 < 3; ++i3) {
        hatC(i1, i2, i3) =
            0.5 * (0.5 * d2X[i1][i2][i3] + trG2(i1, i2, i3) - trg3(i1, i2, i3) / 3.0);
        for (int i4 = 0; i4 < 3; ++i4) {
          hatB(i1, i2, i3, i4) = 1.5 * gi2[i1][i2][i3][i4];
          double cross = 0;
          for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cross += gi2[i1][i2][i][j] * dG[i3][i4][i][j];
          hatE(i1, i2, i3, i4) = 0.5 * (d3X[i1][i2][i3][i4] / 6.0 + trG3(i1, i2, i3, i4) / 3.0 +
                                        cross - trg4(i1, i2, i3, i4) / 12.0);
          for (int i5 = 0; i5 < 3; ++i5) {
            hatD(i1, i2, i3, i4, i5) = 0.5 * gi3[i1][i2][i3][i4][i5];
            for (int i6 = 0; i6 < 3; ++i6)
              hatF(i1, i2, i3, i4, i5, i6) = 0.125 * gi4[i1][i2][i3][i4][i5][i6];
          }
        }
      }
    }

  pe.b0 = 0.25 * Xo;
  const double b0v[3] = {pe.b0.x, pe.b0.y, pe.b0.z};

  // tensors sourced by the b0 x/|x| block
  Tensor<1> starA;
  Tensor<3> starB;
  Tensor<5> starC;
  Tensor<2> starD;
  Tensor<4> starE;
  Tensor<6> starF;
  for (int i1 = 0; i1 < 3; ++i1) {
    double s1 = 0, s2 = 0;
    for (int i = 0; i < 3; ++i) s1 += b0v[i] * dX[i1][i];
    for (int k = 0; k < 3; ++k) s2 += b0v[k] * trG1(i1, k);
    starA(i1) = -(0.5 * s1 + s2);
    for (int i2 = 0; i2 < 3; ++i2) {
      double t1 = 0, t2 = 0;
      for (int i = 0; i < 3; ++i) t1 += b0v[i] * d2X[i1][i2][i];
      for (int k = 0; k < 3; ++k) t2 += b0v[k] * trG2(i1, i2, k);
      starD(i1, i2) = -0.5 * (0.5 * t1 + t2);
      for (int i3 = 0; i3 < 3; ++i3) {
        double head = 0.5 * dX[i1][i2] + trG1(i1, i2) - 0.5 * trg2(i1, i2);
        double tail = 0;
        for (int i = 0; i < 3; ++i) tail += b0v[i] * gi2[i1][i2][i][i3];
        starB(i1, i2, i3) = head * b0v[i3] - tail;
        for (int i4 = 0; i4 < 3; ++i4) {
          double head3 = 0.25 * d2X[i1][i2][i3] + 0.5 * trG2(i1, i2, i3) - trg3(i1, i2, i3) / 6.0;
          double tail3 = 0;
          for (int i = 0; i < 3; ++i) tail3 += b0v[i] * gi3[i1][i2][i3][i][i4];
          starE(i1, i2, i3, i4) = head3 * b0v[i4] - tail3 / 3.0;
          for (int i5 = 0; i5 < 3; ++i5) {
            starC(i1, i2, i3, i4, i5) = 1.5 * gi2[i1][i2][i3][i4] * b0v[i5];
            for (int i6 = 0; i6 < 3; ++i6)
              starF(i1, i2, i3, i4, i5, i6) = 0.5 * gi3[i1][i2][i3][i4][i5] * b0v[i6];
          }
        }
      }
    }
  }

  // first-order tables
  for (int i = 0; i < Tensor<4>::size; ++i) pe.e1.v[i] = hatB.v[i] / 18.0;
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2)
      pe.c1(i1, i2) =
          0.25 * (2.0 * insert2_sum(pe.e1, {i1, i2}) + hatA(i1, i2) + 0.5 * b0v[i1] * X0[i2]);
  pe.a1 = -(pe.c1(0, 0) + pe.c1(1, 1) + pe.c1(2, 2)) + 0.25 * dot(pe.b0, Xo);

  // tensors sourced by the first-order block
  Tensor<3> tilB;
  Tensor<2> tilC;
  Tensor<4> tilD;
  Tensor<6> tilE;
  auto c1sym = [&](int a, int b) { return pe.c1(a, b) + pe.c1(b, a); };
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2) {
      double v = 0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          v += 0.5 * gi2[i1][i2][i][j] * ((i == j ? pe.a1 : 0.0) + 2.0 * pe.c1(i, j));
      v -= pe.a1 * trG1(i1, i2);
      for (int k = 0; k < 3; ++k) v -= trG1(i1, k) * c1sym(k, i2);
      v -= 0.5 * pe.a1 * dX[i1][i2];
      for (int k = 0; k < 3; ++k) v -= 0.5 * dX[i1][k] * c1sym(k, i2);
      tilC(i1, i2) = v;

      for (int i3 = 0; i3 < 3; ++i3) {
        // the -1/2 drift prefactor stays on every gradient term of the
        // first-order block, not just the lowest one
        tilB(i1, i2, i3) =
            0.5 * X0[i1] * pe.c1(i2, i3) - 0.5 * insert1_contract(pe.e1, {i1, i2, i3}, Xo);
        for (int i4 = 0; i4 < 3; ++i4) {
          double d = -0.5 * pe.a1 * gi2[i1][i2][i3][i4];
          for (int i = 0; i < 3; ++i) d -= gi2[i1][i2][i3][i] * c1sym(i, i4);
          d -= 0.5 * trg2(i1, i2) * pe.c1(i3, i4);
          d += insert2_weighted(pe.e1, {i3, i4},
                                [&](int i, int j) { return gi2[i1][i2][i][j]; });
          d += trG1(i1, i2) * pe.c1(i3, i4);
          {
            Vec3 w{dG[i1][0][0][0] + dG[i1][0][1][1] + dG[i1][0][2][2],
                   dG[i1][1][0][0] + dG[i1][1][1][1] + dG[i1][1][2][2],
                   dG[i1][2][0][0] + dG[i1][2][1][1] + dG[i1][2][2][2]};
            d -= insert1_contract(pe.e1, {i2, i3, i4}, w);
          }
          d += 0.5 * dX[i1][i2] * pe.c1(i3, i4);
          {
            Vec3 w{dX[i1][0], dX[i1][1], dX[i1][2]};
            d -= 0.5 * insert1_contract(pe.e1, {i2, i3, i4}, w);
          }
          tilD(i1, i2, i3, i4) = d;
          for (int i5 = 0; i5 < 3; ++i5)
            for (int i6 = 0; i6 < 3; ++i6) {
              double e = 0.5 * gi2[i1][i2][i3][i4] * pe.c1(i5, i6);
              Vec3 w{gi2[i1][i2][0][i3], gi2[i1][i2][1][i3], gi2[i1][i2][2][i3]};
              e -= insert1_contract(pe.e1, {i4, i5, i6}, w);
              e -= 0.5 * trg2(i1, i2) * pe.e1(i3, i4, i5, i6);
              e += trG1(i1, i2) * pe.e1(i3, i4, i5, i6);
              e += 0.5 * dX[i1][i2] * pe.e1(i3, i4, i5, i6);
              tilE(i1, i2, i3, i4, i5, i6) = 3.0 * e;
            }
        }
      }
    }

  // second-order tables
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2)
      for (int i3 = 0; i3 < 3; ++i3)
        for (int i4 = 0; i4 < 3; ++i4)
          for (int i5 = 0; i5 < 3; ++i5)
            pe.f2(i1, i2, i3, i4, i5) =
                (hatD(i1, i2, i3, i4, i5) + starC(i1, i2, i3, i4, i5) +
                 1.5 * X0[i1] * pe.e1(i2, i3, i4, i5)) /
                24.0;
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2)
      for (int i3 = 0; i3 < 3; ++i3)
        pe.d2(i1, i2, i3) = (2.0 * insert2_sum(pe.f2, {i1, i2, i3}) + hatC(i1, i2, i3) +
                             starB(i1, i2, i3) + tilB(i1, i2, i3)) /
                            6.0;
  for (int i1 = 0; i1 < 3; ++i1) {
    double cx = 0;
    for (int i = 0; i < 3; ++i) cx += X0[i] * c1sym(i, i1);
    pe.b2[i1] = 0.25 * (0.5 * pe.a1 * X0[i1] + 0.5 * cx - starA(i1) -
                        2.0 * insert2_sum(pe.d2, {i1}));
  }
  const double b2v[3] = {pe.b2.x, pe.b2.y, pe.b2.z};

  // tensors sourced by the second-order block
  Tensor<2> sstarC;
  Tensor<4> sstarD;
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2) {
      sstarC(i1, i2) =
          -0.5 * (X0[i1] * b2v[i2] + insert1_contract(pe.d2, {i1, i2}, Xo));
      for (int i3 = 0; i3 < 3; ++i3)
        for (int i4 = 0; i4 < 3; ++i4)
          sstarD(i1, i2, i3, i4) =
              -0.5 * (-X0[i1] * pe.d2(i2, i3, i4) +
                      insert1_contract(pe.f2, {i1, i2, i3, i4}, Xo));
    }

  // third-order tables
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2)
      for (int i3 = 0; i3 < 3; ++i3)
        for (int i4 = 0; i4 < 3; ++i4)
          for (int i5 = 0; i5 < 3; ++i5)
            for (int i6 = 0; i6 < 3; ++i6)
              for (int i7 = 0; i7 < 3; ++i7)
                for (int i8 = 0; i8 < 3; ++i8)
                  pe.l3(i1, i2, i3, i4, i5, i6, i7, i8) =
                      0.125 * gi2[i1][i2][i3][i4] * pe.e1(i5, i6, i7, i8);
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2)
      for (int i3 = 0; i3 < 3; ++i3)
        for (int i4 = 0; i4 < 3; ++i4)
          for (int i5 = 0; i5 < 3; ++i5)
            for (int i6 = 0; i6 < 3; ++i6)
              pe.h3(i1, i2, i3, i4, i5, i6) =
                  (hatF(i1, i2, i3, i4, i5, i6) + starF(i1, i2, i3, i4, i5, i6) +
                   tilE(i1, i2, i3, i4, i5, i6) + 1.5 * X0[i1] * pe.f2(i2, i3, i4, i5, i6) +
                   2.0 * insert2_sum(pe.l3, {i1, i2, i3, i4, i5, i6})) /
                  30.0;
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2)
      for (int i3 = 0; i3 < 3; ++i3)
        for (int i4 = 0; i4 < 3; ++i4)
          pe.e3(i1, i2, i3, i4) =
              (hatE(i1, i2, i3, i4) + starE(i1, i2, i3, i4) + tilD(i1, i2, i3, i4) +
               sstarD(i1, i2, i3, i4) + 2.0 * insert2_sum(pe.h3, {i1, i2, i3, i4})) /
              8.0;
  for (int i1 = 0; i1 < 3; ++i1)
    for (int i2 = 0; i2 < 3; ++i2)
      pe.c3(i1, i2) = -(starD(i1, i2) + tilC(i1, i2) + sstarC(i1, i2) +
                        2.0 * insert2_sum(pe.e3, {i1, i2})) /
                      6.0;
  pe.a3 = dot(Vec3{b2v[0], b2v[1], b2v[2]}, Xo) / 24.0 -
          (pe.c3(0, 0) + pe.c3(1, 1) + pe.c3(2, 2)) / 6.0;
  return pe;
}

inline PoleExpansion pole_expansion(const Chart& ch, const DriftField& X, const Vec3& o) {
  return pole_expansion(normal_jets(ch, X, o));
}

}  // namespace driftmass
