#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace driftmass {

// Small fixed-size linear algebra on 3-vectors, 3x3 matrices and symmetric
// 3x3 tensors. Templated on the scalar type so the same formulas run on
// plain doubles and on truncated Taylor jets.

template <class T>
struct Vec3t {
  T x{}, y{}, z{};

  T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

using Vec3 = Vec3t<double>;

template <class T>
Vec3t<T> operator+(const Vec3t<T>& a, const Vec3t<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <class T>
Vec3t<T> operator-(const Vec3t<T>& a, const Vec3t<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <class T>
Vec3t<T> operator-(const Vec3t<T>& a) {
  return {-a.x, -a.y, -a.z};
}
template <class T>
Vec3t<T> operator*(const T& s, const Vec3t<T>& v) {
  return {s * v.x, s * v.y, s * v.z};
}
template <class T>
Vec3t<T> operator*(const Vec3t<T>& v, const T& s) {
  return s * v;
}
inline Vec3 operator/(const Vec3& v, double s) { return {v.x / s, v.y / s, v.z / s}; }

// euclidean dot; metric contractions go through Sym3t below
template <class T>
T dot(const Vec3t<T>& a, const Vec3t<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
  double n = norm(v);
  if (n == 0) throw std::domain_error("normalized: zero vector");
  return v / n;
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// symmetric 3x3, stored as the six independent components
template <class T>
struct Sym3t {
  T xx{}, xy{}, xz{}, yy{}, yz{}, zz{};

  T& operator()(int i, int j) {
    if (i > j) std::swap(i, j);
    if (i == 0) return j == 0 ? xx : (j == 1 ? xy : xz);
    if (i == 1) return j == 1 ? yy : yz;
    return zz;
  }
  const T& operator()(int i, int j) const {
    return const_cast<Sym3t*>(this)->operator()(i, j);
  }

  static Sym3t identity() {
    Sym3t s;
    s.xx = T(1); s.yy = T(1); s.zz = T(1);
    return s;
  }
};

using Sym3 = Sym3t<double>;

template <class T>
Sym3t<T> operator+(const Sym3t<T>& a, const Sym3t<T>& b) {
  return {a.xx + b.xx, a.xy + b.xy, a.xz + b.xz, a.yy + b.yy, a.yz + b.yz, a.zz + b.zz};
}
template <class T>
Sym3t<T> operator-(const Sym3t<T>& a, const Sym3t<T>& b) {
  return {a.xx - b.xx, a.xy - b.xy, a.xz - b.xz, a.yy - b.yy, a.yz - b.yz, a.zz - b.zz};
}
template <class T>
Sym3t<T> operator*(const T& s, const Sym3t<T>& a) {
  return {s * a.xx, s * a.xy, s * a.xz, s * a.yy, s * a.yz, s * a.zz};
}

template <class T>
T det(const Sym3t<T>& s) {
  return s.xx * (s.yy * s.zz - s.yz * s.yz) - s.xy * (s.xy * s.zz - s.yz * s.xz) +
         s.xz * (s.xy * s.yz - s.yy * s.xz);
}

template <class T>
Sym3t<T> adjugate(const Sym3t<T>& s) {
  Sym3t<T> a;
  a.xx = s.yy * s.zz - s.yz * s.yz;
  a.xy = s.xz * s.yz - s.xy * s.zz;
  a.xz = s.xy * s.yz - s.xz * s.yy;
  a.yy = s.xx * s.zz - s.xz * s.xz;
  a.yz = s.xy * s.xz - s.xx * s.yz;
  a.zz = s.xx * s.yy - s.xy * s.xy;
  return a;
}

// inverse by adjugate/determinant; the only raising/lowering route used anywhere
template <class T>
Sym3t<T> inverse(const Sym3t<T>& s) {
  T d = det(s);
  return (T(1) / d) * adjugate(s);
}

template <class T>
Vec3t<T> mul(const Sym3t<T>& s, const Vec3t<T>& v) {
  return {s.xx * v.x + s.xy * v.y + s.xz * v.z,
          s.xy * v.x + s.yy * v.y + s.yz * v.z,
          s.xz * v.x + s.yz * v.y + s.zz * v.z};
}

template <class T>
T quad(const Sym3t<T>& s, const Vec3t<T>& a, const Vec3t<T>& b) {
  return dot(a, mul(s, b));
}

template <class T>
T trace(const Sym3t<T>& s) {
  return s.xx + s.yy + s.zz;
}

inline double max_abs(const Sym3& s) {
  double m = 0;
  for (double v : {s.xx, s.xy, s.xz, s.yy, s.yz, s.zz}) m = std::max(m, std::abs(v));
  return m;
}

// positive-definiteness via leading principal minors
inline bool spd_minors(const Sym3& s) {
  if (!(s.xx > 0)) return false;
  if (!(s.xx * s.yy - s.xy * s.xy > 0)) return false;
  return det(s) > 0;
}

// general 3x3
template <class T>
struct Mat3t {
  T a[3][3]{};

  static Mat3t identity() {
    Mat3t m;
    m.a[0][0] = T(1); m.a[1][1] = T(1); m.a[2][2] = T(1);
    return m;
  }
};

using Mat3 = Mat3t<double>;

template <class T>
Mat3t<T> mul(const Mat3t<T>& A, const Mat3t<T>& B) {
  Mat3t<T> C;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      T s = A.a[i][0] * B.a[0][j];
      s = s + A.a[i][1] * B.a[1][j];
      s = s + A.a[i][2] * B.a[2][j];
      C.a[i][j] = s;
    }
  return C;
}

template <class T>
Vec3t<T> mul(const Mat3t<T>& A, const Vec3t<T>& v) {
  return {A.a[0][0] * v.x + A.a[0][1] * v.y + A.a[0][2] * v.z,
          A.a[1][0] * v.x + A.a[1][1] * v.y + A.a[1][2] * v.z,
          A.a[2][0] * v.x + A.a[2][1] * v.y + A.a[2][2] * v.z};
}

template <class T>
Mat3t<T> transpose(const Mat3t<T>& A) {
  Mat3t<T> B;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) B.a[i][j] = A.a[j][i];
  return B;
}

template <class T>
T det(const Mat3t<T>& m) {
  return m.a[0][0] * (m.a[1][1] * m.a[2][2] - m.a[1][2] * m.a[2][1]) -
         m.a[0][1] * (m.a[1][0] * m.a[2][2] - m.a[1][2] * m.a[2][0]) +
         m.a[0][2] * (m.a[1][0] * m.a[2][1] - m.a[1][1] * m.a[2][0]);
}

template <class T>
Mat3t<T> inverse(const Mat3t<T>& m) {
  Mat3t<T> c;  // adjugate
  c.a[0][0] = m.a[1][1] * m.a[2][2] - m.a[1][2] * m.a[2][1];
  c.a[0][1] = m.a[0][2] * m.a[2][1] - m.a[0][1] * m.a[2][2];
  c.a[0][2] = m.a[0][1] * m.a[1][2] - m.a[0][2] * m.a[1][1];
  c.a[1][0] = m.a[1][2] * m.a[2][0] - m.a[1][0] * m.a[2][2];
  c.a[1][1] = m.a[0][0] * m.a[2][2] - m.a[0][2] * m.a[2][0];
  c.a[1][2] = m.a[0][2] * m.a[1][0] - m.a[0][0] * m.a[1][2];
  c.a[2][0] = m.a[1][0] * m.a[2][1] - m.a[1][1] * m.a[2][0];
  c.a[2][1] = m.a[0][1] * m.a[2][0] - m.a[0][0] * m.a[2][1];
  c.a[2][2] = m.a[0][0] * m.a[1][1] - m.a[0][1] * m.a[1][0];
  T d = det(m);
  Mat3t<T> r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.a[i][j] = c.a[i][j] / d;
  return r;
}

// Cholesky g = L L^T, lower triangular; false if not positive definite
inline bool cholesky_lower(const Sym3& g, Mat3& L) {
  double a = g.xx;
  if (a <= 0) return false;
  double l00 = std::sqrt(a);
  double l10 = g.xy / l00, l20 = g.xz / l00;
  double b = g.yy - l10 * l10;
  if (b <= 0) return false;
  double l11 = std::sqrt(b);
  double l21 = (g.yz - l20 * l10) / l11;
  double c = g.zz - l20 * l20 - l21 * l21;
  if (c <= 0) return false;
  L = Mat3{};
  L.a[0][0] = l00;
  L.a[1][0] = l10; L.a[1][1] = l11;
  L.a[2][0] = l20; L.a[2][1] = l21; L.a[2][2] = std::sqrt(c);
  return true;
}

// 3x3 linear solve with partial pivoting
inline Vec3 solve3(Mat3 A, Vec3 b) {
  int perm[3] = {0, 1, 2};
  double rhs[3] = {b.x, b.y, b.z};
  for (int col = 0; col < 2; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(A.a[r][col]) > std::abs(A.a[piv][col])) piv = r;
    if (piv != col) {
      std::swap(perm[piv], perm[col]);
      for (int k = 0; k < 3; ++k) std::swap(A.a[piv][k], A.a[col][k]);
      std::swap(rhs[piv], rhs[col]);
    }
    if (A.a[col][col] == 0) throw std::domain_error("solve3: singular matrix");
    for (int r = col + 1; r < 3; ++r) {
      double f = A.a[r][col] / A.a[col][col];
      for (int k = col; k < 3; ++k) A.a[r][k] -= f * A.a[col][k];
      rhs[r] -= f * rhs[col];
    }
  }
  if (A.a[2][2] == 0) throw std::domain_error("solve3: singular matrix");
  double z = rhs[2] / A.a[2][2];
  double y = (rhs[1] - A.a[1][2] * z) / A.a[1][1];
  double x = (rhs[0] - A.a[0][1] * y - A.a[0][2] * z) / A.a[0][0];
  return {x, y, z};
}

}  // namespace driftmass
