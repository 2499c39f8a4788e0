#pragma once

#include <functional>
#include <string>

#include "driftmass/chart.hpp"
#include "driftmass/jet.hpp"

namespace driftmass {

// The drift vector field X. Component closures with jet access to order 3,
// declared decay |X| = O(|x|^{-1-tau0}). Gradient drifts remember their
// weight function; that is what the rigidity checks differentiate.

struct DriftField {
  std::string name = "zero";
  std::function<Vec3(const Vec3&)> value;
  std::function<JVec<1>(const Vec3&)> jet1;
  std::function<JVec<3>(const Vec3&)> jet3;
  double declared_tau0 = 1.0;
  bool zero = false;
  bool radial = false;
  bool is_gradient = false;  // X = grad_g f with the weight f known
  std::function<double(const Vec3&)> weight;
  std::function<Jet<4>(const Vec3&)> weight_jet4;
};

inline DriftField zero_drift() {
  DriftField X;
  X.value = [](const Vec3&) { return Vec3{0, 0, 0}; };
  X.jet1 = [](const Vec3&) { return JVec<1>{}; };
  X.jet3 = [](const Vec3&) { return JVec<3>{}; };
  X.zero = true;
  X.radial = true;
  X.is_gradient = true;
  X.weight = [](const Vec3&) { return 0.0; };
  X.weight_jet4 = [](const Vec3&) { return Jet<4>(); };
  X.declared_tau0 = 1.0;
  return X;
}

// F is a generic lambda Vec3t<T> -> Vec3t<T>
template <class F>
DriftField make_drift(std::string name, F f, double tau0, bool radial = false) {
  DriftField X;
  X.name = std::move(name);
  X.declared_tau0 = tau0;
  X.radial = radial;
  X.value = [f](const Vec3& p) { return f(p); };
  X.jet1 = [f](const Vec3& p) { return f(jet_point<1>(p)); };
  X.jet3 = [f](const Vec3& p) { return f(jet_point<3>(p)); };
  return X;
}

// X = -2 E for an electric field E
template <class F>
DriftField electric_drift(std::string name, F e_field, double tau0, bool radial = false) {
  auto x = [e_field](const auto& p) {
    auto e = e_field(p);
    using T = decltype(e.x);
    return Vec3t<T>{T(-2.0) * e.x, T(-2.0) * e.y, T(-2.0) * e.z};
  };
  return make_drift(std::move(name), x, tau0, radial);
}

// X = grad_g f, index raised through the chart's metric. W is a generic
// scalar lambda Vec3t<T> -> T.
template <class W>
DriftField gradient_drift(std::string name, const Chart& chart, W f, double tau0,
                          bool radial = false) {
  DriftField X;
  X.name = std::move(name);
  X.declared_tau0 = tau0;
  X.radial = radial;
  X.is_gradient = true;
  X.weight = [f](const Vec3& p) { return f(p); };
  X.weight_jet4 = [f](const Vec3& p) { return f(jet_point<4>(p)); };

  auto chart_jet1 = chart.jet1;
  auto chart_jet4 = chart.jet4;

  X.value = [f, chart_jet1](const Vec3& p) {
    auto fj = f(jet_point<1>(p));
    Vec3 df{fj.deriv(1, 0, 0), fj.deriv(0, 1, 0), fj.deriv(0, 0, 1)};
    auto gj = chart_jet1(p);
    Sym3 g{gj.xx.value(), gj.xy.value(), gj.xz.value(),
           gj.yy.value(), gj.yz.value(), gj.zz.value()};
    return mul(inverse(g), df);
  };
  X.jet1 = [f, chart_jet1](const Vec3& p) {
    auto fj = f(jet_point<2>(p));
    JVec<1> df{jet_cast<1>(deriv_jet(fj, 0)), jet_cast<1>(deriv_jet(fj, 1)),
               jet_cast<1>(deriv_jet(fj, 2))};
    auto g = chart_jet1(p);
    return mul(inverse(g), df);
  };
  X.jet3 = [f, chart_jet4](const Vec3& p) {
    auto fj = f(jet_point<4>(p));
    JVec<3> df{deriv_jet(fj, 0), deriv_jet(fj, 1), deriv_jet(fj, 2)};
    auto g4 = chart_jet4(p);
    JSym<3> g{jet_cast<3>(g4.xx), jet_cast<3>(g4.xy), jet_cast<3>(g4.xz),
              jet_cast<3>(g4.yy), jet_cast<3>(g4.yz), jet_cast<3>(g4.zz)};
    return mul(inverse(g), df);
  };
  return X;
}

// pointwise sum, for the mass linearity check
inline DriftField add_drifts(const DriftField& a, const DriftField& b) {
  DriftField X;
  X.name = a.name + "+" + b.name;
  X.declared_tau0 = std::min(a.declared_tau0, b.declared_tau0);
  X.zero = a.zero && b.zero;
  X.radial = a.radial && b.radial;
  auto av = a.value, bv = b.value;
  auto a1 = a.jet1, b1 = b.jet1;
  auto a3 = a.jet3, b3 = b.jet3;
  X.value = [av, bv](const Vec3& p) { return av(p) + bv(p); };
  X.jet1 = [a1, b1](const Vec3& p) { return a1(p) + b1(p); };
  X.jet3 = [a3, b3](const Vec3& p) { return a3(p) + b3(p); };
  return X;
}

}  // namespace driftmass
