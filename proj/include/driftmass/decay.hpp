#pragma once

#include <limits>
#include <string>
#include <vector>

#include "driftmass/chart.hpp"
#include "driftmass/drift.hpp"
#include "driftmass/fit.hpp"

namespace driftmass {

// Decay audit: fits the actual fall-off of g - delta, dg, d^2g, X, dX on
// sampled shells and compares with the declared orders. Everything downstream
// that needs an asymptotic exponent consumes tau_used: the declared rate once
// the audit confirms it (fitted slopes of shell sups wobble with the sample
// directions, declared rates do not), the fitted rate when the declaration
// fails, capped a hair below 1 because the asymptotic analysis assumes
// tau in (1/2, 1).

struct DecayAudit {
  double tau_fit = 0;
  double tau0_fit = 0;
  bool exactly_flat = false;
  bool exactly_zero_drift = false;
  bool pass = false;
  double tau_used = 0;
  double tau0_used = 0;
  bool cap_applied = false;
  SlopeFit sl_g, sl_dg, sl_d2g, sl_x, sl_dx;
  std::string message;
};

namespace detail {

// 26 cube directions; deterministic shell sampling
inline const std::vector<Vec3>& shell_directions() {
  static const std::vector<Vec3> dirs = [] {
    std::vector<Vec3> d;
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          if (a == 0 && b == 0 && c == 0) continue;
          d.push_back(normalized(Vec3{double(a), double(b), double(c)}));
        }
    return d;
  }();
  return dirs;
}

}  // namespace detail

inline DecayAudit decay_audit(const Chart& ch, const DriftField& X,
                              const std::vector<double>& radii, double tolerance = 0.1) {
  if (radii.size() < 3) throw std::invalid_argument("decay_audit needs at least 3 radii");
  for (size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1]))
      throw std::invalid_argument("decay_audit radii must be increasing");

  const double floor = 1e-13;
  std::vector<double> dev_g, dev_dg, dev_d2g, dev_x, dev_dx;
  for (double r : radii) {
    double mg = 0, mdg = 0, md2g = 0, mx = 0, mdx = 0;
    for (const Vec3& n : detail::shell_directions()) {
      Vec3 p = r * n;
      auto jets = metric_jets<2>(ch, p);
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          const auto& jc = jets(i, j);
          mg = std::max(mg, std::abs(jc.value() - (i == j ? 1.0 : 0.0)));
          for (int a = 0; a < 3; ++a) {
            int e[3] = {0, 0, 0};
            e[a] = 1;
            mdg = std::max(mdg, std::abs(jc.deriv(e[0], e[1], e[2])));
            for (int b = a; b < 3; ++b) {
              int e2[3] = {0, 0, 0};
              e2[a]++;
              e2[b]++;
              md2g = std::max(md2g, std::abs(jc.deriv(e2[0], e2[1], e2[2])));
            }
          }
        }
      auto xj = X.jet1(p);
      for (int i = 0; i < 3; ++i) {
        mx = std::max(mx, std::abs(xj[i].value()));
        for (int a = 0; a < 3; ++a) {
          int e[3] = {0, 0, 0};
          e[a] = 1;
          mdx = std::max(mdx, std::abs(xj[i].deriv(e[0], e[1], e[2])));
        }
      }
    }
    dev_g.push_back(mg);
    dev_dg.push_back(mdg);
    dev_d2g.push_back(md2g);
    dev_x.push_back(mx);
    dev_dx.push_back(mdx);
  }

  DecayAudit out;
  auto all_below = [&](const std::vector<double>& v) {
    for (double d : v)
      if (d > floor) return false;
    return true;
  };
  out.exactly_flat = all_below(dev_g) && all_below(dev_dg) && all_below(dev_d2g);
  out.exactly_zero_drift = all_below(dev_x) && all_below(dev_dx);

  const double inf = std::numeric_limits<double>::infinity();
  if (out.exactly_flat) {
    out.tau_fit = inf;
    out.message = "exactly flat";
  } else {
    out.sl_g = loglog_slope(radii, dev_g, floor);
    out.sl_dg = loglog_slope(radii, dev_dg, floor);
    out.sl_d2g = loglog_slope(radii, dev_d2g, floor);
    double t = inf;
    if (out.sl_g.ok) t = std::min(t, -out.sl_g.slope);
    if (out.sl_dg.ok) t = std::min(t, -out.sl_dg.slope - 1.0);
    if (out.sl_d2g.ok) t = std::min(t, -out.sl_d2g.slope - 2.0);
    out.tau_fit = t;
  }
  if (out.exactly_zero_drift) {
    out.tau0_fit = inf;
  } else {
    out.sl_x = loglog_slope(radii, dev_x, floor);
    out.sl_dx = loglog_slope(radii, dev_dx, floor);
    double t = inf;
    if (out.sl_x.ok) t = std::min(t, -out.sl_x.slope - 1.0);
    if (out.sl_dx.ok) t = std::min(t, -out.sl_dx.slope - 2.0);
    out.tau0_fit = t;
  }

  bool g_ok = out.exactly_flat || out.tau_fit >= ch.traits.declared_tau - tolerance;
  bool x_ok = out.exactly_zero_drift || out.tau0_fit >= X.declared_tau0 - tolerance;
  out.pass = g_ok && x_ok;

  const double cap = 1.0 - 1e-6;
  out.tau_used = std::min(g_ok ? ch.traits.declared_tau : out.tau_fit, cap);
  out.tau0_used = std::min(x_ok ? X.declared_tau0 : out.tau0_fit, cap);
  out.cap_applied = (g_ok ? ch.traits.declared_tau : out.tau_fit) > cap ||
                    (x_ok ? X.declared_tau0 : out.tau0_fit) > cap;
  if (!g_ok)
    out.message = "metric decay slower than declared: fitted tau " + std::to_string(out.tau_fit);
  else if (!x_ok)
    out.message = "drift decay slower than declared: fitted tau0 " + std::to_string(out.tau0_fit);
  return out;
}

}  // namespace driftmass
