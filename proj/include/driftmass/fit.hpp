#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace driftmass {

// Small least-squares helpers used by the decay audits, mass extrapolation
// and far-field fits. Normal equations are fine at these sizes (<= 6 params).

struct LsqFit {
  std::vector<double> coef;
  double rms = 0;
  bool ok = false;
};

// rows[i] holds the basis values for sample i
inline LsqFit least_squares(const std::vector<std::vector<double>>& rows,
                            const std::vector<double>& y) {
  LsqFit out;
  size_t n = rows.size();
  if (n == 0 || n != y.size()) return out;
  size_t k = rows[0].size();
  if (k == 0 || n < k) return out;

  std::vector<double> ata(k * k, 0.0), aty(k, 0.0);
  for (size_t i = 0; i < n; ++i) {
    if (rows[i].size() != k) return out;
    for (size_t a = 0; a < k; ++a) {
      aty[a] += rows[i][a] * y[i];
      for (size_t b = 0; b < k; ++b) ata[a * k + b] += rows[i][a] * rows[i][b];
    }
  }

  // gaussian elimination with partial pivoting
  std::vector<double> m = ata, rhs = aty;
  std::vector<size_t> piv(k);
  for (size_t i = 0; i < k; ++i) piv[i] = i;
  for (size_t col = 0; col < k; ++col) {
    size_t best = col;
    for (size_t r = col + 1; r < k; ++r)
      if (std::abs(m[r * k + col]) > std::abs(m[best * k + col])) best = r;
    if (m[best * k + col] == 0) return out;
    if (best != col) {
      for (size_t c = 0; c < k; ++c) std::swap(m[best * k + c], m[col * k + c]);
      std::swap(rhs[best], rhs[col]);
    }
    for (size_t r = col + 1; r < k; ++r) {
      double f = m[r * k + col] / m[col * k + col];
      for (size_t c = col; c < k; ++c) m[r * k + c] -= f * m[col * k + c];
      rhs[r] -= f * rhs[col];
    }
  }
  out.coef.assign(k, 0.0);
  for (size_t ri = k; ri-- > 0;) {
    double s = rhs[ri];
    for (size_t c = ri + 1; c < k; ++c) s -= m[ri * k + c] * out.coef[c];
    out.coef[ri] = s / m[ri * k + ri];
  }

  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    double pred = 0;
    for (size_t a = 0; a < k; ++a) pred += rows[i][a] * out.coef[a];
    ss += (y[i] - pred) * (y[i] - pred);
  }
  out.rms = std::sqrt(ss / double(n));
  out.ok = true;
  return out;
}

// QR variant (modified Gram-Schmidt) for fits whose basis spans many orders
// of magnitude, e.g. Laurent coefficient recovery; normal equations square
// the conditioning and fall over there.
inline LsqFit least_squares_qr(const std::vector<std::vector<double>>& rows,
                               const std::vector<double>& y) {
  LsqFit out;
  size_t n = rows.size();
  if (n == 0 || n != y.size()) return out;
  size_t k = rows[0].size();
  if (k == 0 || n < k) return out;
  std::vector<std::vector<double>> q(k, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i) {
    if (rows[i].size() != k) return out;
    for (size_t a = 0; a < k; ++a) q[a][i] = rows[i][a];
  }
  std::vector<double> r(k * k, 0.0);
  for (size_t a = 0; a < k; ++a) {
    for (size_t b = 0; b < a; ++b) {
      double d = 0;
      for (size_t i = 0; i < n; ++i) d += q[b][i] * q[a][i];
      r[b * k + a] = d;
      for (size_t i = 0; i < n; ++i) q[a][i] -= d * q[b][i];
    }
    double nrm = 0;
    for (size_t i = 0; i < n; ++i) nrm += q[a][i] * q[a][i];
    nrm = std::sqrt(nrm);
    if (!(nrm > 0)) return out;
    r[a * k + a] = nrm;
    for (size_t i = 0; i < n; ++i) q[a][i] /= nrm;
  }
  std::vector<double> c(k, 0.0);
  for (size_t a = 0; a < k; ++a)
    for (size_t i = 0; i < n; ++i) c[a] += q[a][i] * y[i];
  out.coef.assign(k, 0.0);
  for (size_t a = k; a-- > 0;) {
    double s = c[a];
    for (size_t b = a + 1; b < k; ++b) s -= r[a * k + b] * out.coef[b];
    out.coef[a] = s / r[a * k + a];
  }
  double ss = 0;
  for (size_t i = 0; i < n; ++i) {
    double pred = 0;
    for (size_t a = 0; a < k; ++a) pred += rows[i][a] * out.coef[a];
    ss += (y[i] - pred) * (y[i] - pred);
  }
  out.rms = std::sqrt(ss / double(n));
  out.ok = true;
  return out;
}

struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double rms = 0;
  int n_used = 0;
  bool ok = false;
};

// slope of log|y| against log x, skipping samples at or below the floor
inline SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                             double floor = 1e-300) {
  SlopeFit out;
  std::vector<std::vector<double>> rows;
  std::vector<double> ly;
  for (size_t i = 0; i < x.size() && i < y.size(); ++i) {
    double ay = std::abs(y[i]);
    if (!(x[i] > 0) || !(ay > floor)) continue;
    rows.push_back({std::log(x[i]), 1.0});
    ly.push_back(std::log(ay));
  }
  out.n_used = int(rows.size());
  if (rows.size() < 2) return out;
  LsqFit f = least_squares(rows, ly);
  if (!f.ok) return out;
  out.slope = f.coef[0];
  out.intercept = f.coef[1];
  out.rms = f.rms;
  out.ok = true;
  return out;
}

struct TailFit {
  double c0 = 0;  // extrapolated value
  double c1 = 0;
  double rms = 0;
  bool ok = false;
};

// y ~ c0 + c1 * r^{-p}
inline TailFit fit_offset_power(const std::vector<double>& r, const std::vector<double>& y,
                                double p) {
  TailFit out;
  if (r.size() != y.size() || r.size() < 2) return out;
  std::vector<std::vector<double>> rows;
  for (double ri : r) {
    if (!(ri > 0)) return out;
    rows.push_back({1.0, std::pow(ri, -p)});
  }
  LsqFit f = least_squares(rows, y);
  if (!f.ok) return out;
  out.c0 = f.coef[0];
  out.c1 = f.coef[1];
  out.rms = f.rms;
  out.ok = true;
  return out;
}

}  // namespace driftmass
