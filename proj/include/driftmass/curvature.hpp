#pragma once

#include <cmath>
#include <stdexcept>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"

namespace driftmass {

// Pointwise curvature of a chart: Christoffel symbols, Ricci, scalar
// curvature, div X and the modified scalar R + 2 div X - (1 + 1/k) |X|^2.

struct CurvatureReport {
  Vec3 point{};
  double k = 1;
  double gamma[3][3][3]{};  // gamma[c][i][j] with lower pair symmetric
  Sym3 ricci{};
  double ricci_asymmetry = 0;  // numerical asymmetry before symmetrizing
  double scalar = 0;
  double div_x = 0;
  double x_norm2 = 0;  // |X|^2 in g
  double r_x_k = 0;
};

// legal drift exponents: k real, outside (-2, 0]
inline void require_valid_k(double k) {
  if (k > -2.0 && k <= 0.0)
    throw std::invalid_argument(
        "drift exponent k must lie outside (-2, 0]; got k=" + std::to_string(k));
}

inline CurvatureReport curvature_at(const Chart& ch, const Vec3& x, const DriftField& X,
                                    double k) {
  require_valid_k(k);
  auto jets = metric_jets<2>(ch, x);

  double g[3][3], dg[3][3][3], d2g[3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const auto& jc = jets(i, j);
      g[i][j] = jc.value();
      for (int a = 0; a < 3; ++a) {
        int e1[3] = {0, 0, 0};
        e1[a] = 1;
        dg[a][i][j] = jc.deriv(e1[0], e1[1], e1[2]);
        for (int b = a; b < 3; ++b) {
          int e2[3] = {0, 0, 0};
          e2[a]++;
          e2[b]++;
          double v = jc.deriv(e2[0], e2[1], e2[2]);
          d2g[a][b][i][j] = v;
          d2g[b][a][i][j] = v;
        }
      }
    }

  Sym3 gs{g[0][0], g[0][1], g[0][2], g[1][1], g[1][2], g[2][2]};
  Sym3 gi = inverse(gs);

  CurvatureReport rep;
  rep.point = x;
  rep.k = k;

  // Gamma^c_ij = 1/2 g^{cl} (dg_i g_jl + dg_j g_il - dg_l g_ij)
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        double s = 0;
        for (int l = 0; l < 3; ++l)
          s += gi(c, l) * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
        rep.gamma[c][i][j] = 0.5 * s;
        rep.gamma[c][j][i] = rep.gamma[c][i][j];
      }

  // del_a g^{cl} = - g^{cm} (del_a g_mn) g^{nl}
  double dgi[3][3][3];
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      for (int l = 0; l < 3; ++l) {
        double s = 0;
        for (int m = 0; m < 3; ++m)
          for (int n = 0; n < 3; ++n) s += gi(c, m) * dg[a][m][n] * gi(n, l);
        dgi[a][c][l] = -s;
      }

  // del_a Gamma^c_ij
  double dgamma[3][3][3][3];
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double s = 0;
          for (int l = 0; l < 3; ++l) {
            s += dgi[a][c][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
            s += gi(c, l) * (d2g[a][i][j][l] + d2g[a][j][i][l] - d2g[a][l][i][j]);
          }
          dgamma[a][c][i][j] = 0.5 * s;
        }

  // Ric_ij = del_c Gamma^c_ij - del_i Gamma^c_cj + Gamma^c_cl Gamma^l_ij
  //          - Gamma^c_il Gamma^l_cj
  double ric[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int c = 0; c < 3; ++c) {
        s += dgamma[c][c][i][j] - dgamma[i][c][c][j];
        for (int l = 0; l < 3; ++l)
          s += rep.gamma[c][c][l] * rep.gamma[l][i][j] - rep.gamma[c][i][l] * rep.gamma[l][c][j];
      }
      ric[i][j] = s;
    }
  double asym = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) asym = std::max(asym, std::abs(ric[i][j] - ric[j][i]));
  rep.ricci_asymmetry = asym;
  rep.ricci = Sym3{ric[0][0], 0.5 * (ric[0][1] + ric[1][0]), 0.5 * (ric[0][2] + ric[2][0]),
                   ric[1][1], 0.5 * (ric[1][2] + ric[2][1]), ric[2][2]};

  double R = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) R += gi(i, j) * rep.ricci(i, j);
  rep.scalar = R;

  // div X = del_i X^i + Gamma^i_ij X^j, |X|^2 = g_ij X^i X^j
  auto xj = X.jet1(x);
  Vec3 xv{xj.x.value(), xj.y.value(), xj.z.value()};
  double divx = 0;
  for (int i = 0; i < 3; ++i) {
    int e[3] = {0, 0, 0};
    e[i] = 1;
    divx += xj[i].deriv(e[0], e[1], e[2]);
    for (int j = 0; j < 3; ++j) divx += rep.gamma[i][i][j] * xv[j];
  }
  rep.div_x = divx;
  rep.x_norm2 = quad(gs, xv, xv);
  rep.r_x_k = R + 2.0 * divx - (1.0 + 1.0 / k) * rep.x_norm2;
  return rep;
}

}  // namespace driftmass
