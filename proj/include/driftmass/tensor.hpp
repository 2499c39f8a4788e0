#pragma once

#include <array>
#include <vector>

#include "driftmass/vec.hpp"

namespace driftmass {

namespace detail {
constexpr int pow3(int r) { return r == 0 ? 1 : 3 * pow3(r - 1); }
}

// dense little tensors over the index set {0,1,2}; ranks up to 8 appear in
// the pole-series coefficient tables
template <int R>
struct Tensor {
  static constexpr int rank = R;
  static constexpr int size = detail::pow3(R);
  std::array<double, size> v{};

  static int flat(const std::array<int, R>& idx) {
    int f = 0;
    for (int k = 0; k < R; ++k) f = 3 * f + idx[k];
    return f;
  }
  double& at(const std::array<int, R>& idx) { return v[flat(idx)]; }
  double at(const std::array<int, R>& idx) const { return v[flat(idx)]; }
  template <class... I>
  double& operator()(I... i) {
    static_assert(sizeof...(I) == R);
    return at({int(i)...});
  }
  template <class... I>
  double operator()(I... i) const {
    static_assert(sizeof...(I) == R);
    return at({int(i)...});
  }
  double max_abs() const {
    double m = 0;
    for (double d : v) m = std::max(m, std::abs(d));
    return m;
  }
};

// sum over insertions of the ordered pair (i, j), weighted by S(i, j), into
// the slots of T around the fixed multi-index `base`:
//   sum_{p<q} sum_{i,j} S(i, j) * T(..., i at slot p, ..., j at slot q, ...)
template <int R, class W>
double insert2_weighted(const Tensor<R>& T, const std::array<int, R - 2>& base, W&& S) {
  double acc = 0;
  std::array<int, R> idx;
  for (int p = 0; p < R; ++p)
    for (int q = p + 1; q < R; ++q)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double s = S(i, j);
          if (s == 0) continue;
          int b = 0;
          for (int sl = 0; sl < R; ++sl) {
            if (sl == p)
              idx[sl] = i;
            else if (sl == q)
              idx[sl] = j;
            else
              idx[sl] = base[b++];
          }
          acc += s * T.at(idx);
        }
  return acc;
}

// the repeated-index form written e_{i i a b} + e_{i a i b} + ... in the
// coefficient ledger
template <int R>
double insert2_sum(const Tensor<R>& T, const std::array<int, R - 2>& base) {
  return insert2_weighted(T, base, [](int i, int j) { return i == j ? 1.0 : 0.0; });
}

// single insertions of a summed index contracted against vec:
//   sum_p sum_i vec_i T(..., i at slot p, ...)
template <int R>
double insert1_contract(const Tensor<R>& T, const std::array<int, R - 1>& base, const Vec3& vec) {
  double acc = 0;
  std::array<int, R> idx;
  for (int p = 0; p < R; ++p)
    for (int i = 0; i < 3; ++i) {
      int b = 0;
      for (int sl = 0; sl < R; ++sl) {
        if (sl == p)
          idx[sl] = i;
        else
          idx[sl] = base[b++];
      }
      acc += vec[i] * T.at(idx);
    }
  return acc;
}

// full contraction against direction monomials mu^{i1}...mu^{iR}, folding the
// trailing index once per pass; works for jet-valued directions
template <int R, class T>
T contract(const Tensor<R>& A, const Vec3t<T>& mu) {
  std::vector<T> cur;
  cur.reserve(Tensor<R>::size);
  for (double d : A.v) cur.push_back(T(d));
  int n = Tensor<R>::size;
  for (int r = 0; r < R; ++r) {
    n /= 3;
    for (int k = 0; k < n; ++k) cur[k] = cur[3 * k] * mu[0] + cur[3 * k + 1] * mu[1] + cur[3 * k + 2] * mu[2];
  }
  return cur[0];
}

}  // namespace driftmass
