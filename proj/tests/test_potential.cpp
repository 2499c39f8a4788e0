#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "driftmass/driftmass.hpp"

using namespace driftmass;
using Catch::Approx;

namespace {

Chart flat_chart(bool radial = true) {
  ChartTraits tr;
  tr.radial = radial;
  return make_chart("flat", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    return Sym3t<T>::identity();
  }, tr);
}

Chart flat_boundary_chart(double r0) {
  ChartTraits tr;
  tr.radial = true;
  tr.boundary_radius = r0;
  return make_chart("flat_bdry", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    return Sym3t<T>::identity();
  }, tr);
}

// conformal factor (1 + m/2r)^4 outside r_c, capped inside by an even
// polynomial matched to second order, so the origin is an interior point.
// outside the cap the kernel has the closed form 1 - u = 1/(r + m/2).
Chart capped_schw_chart(double m, double rc) {
  double phi = 1.0 + m / (2.0 * rc);
  double v0 = phi * phi * phi * phi;
  double v1 = -2.0 * m * phi * phi * phi / (rc * rc);
  double v2 = 3.0 * m * m * phi * phi / (rc * rc * rc * rc) +
              4.0 * m * phi * phi * phi / (rc * rc * rc);
  double c4 = (v2 - v1 / rc) / (8.0 * rc * rc);
  double c2 = v1 / (2.0 * rc) - 2.0 * c4 * rc * rc;
  double c0 = v0 - c2 * rc * rc - c4 * rc * rc * rc * rc;
  ChartTraits tr;
  tr.radial = true;
  return make_chart("capped_schw", [=](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T f;
    if (value_of(r2) >= rc * rc) {
      T r = sqrt(r2);
      T ph = T(1.0) + (m / 2.0) * reciprocal(r);
      f = ph * ph;
      f = f * f;
    } else {
      f = T(c0) + c2 * r2 + c4 * r2 * r2;
    }
    return f * Sym3t<T>::identity();
  }, tr);
}

Chart schw_horizon_chart(double m) {
  ChartTraits tr;
  tr.radial = true;
  tr.boundary_radius = m / 2.0;
  return make_chart("schw_horizon", [m](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r = sqrt(x.x * x.x + x.y * x.y + x.z * x.z);
    T ph = T(1.0) + (m / 2.0) * reciprocal(r);
    T f = ph * ph;
    f = f * f;
    return f * Sym3t<T>::identity();
  }, tr);
}

Chart bump_chart() {
  ChartTraits tr;
  tr.radial = true;
  return make_chart("bump", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T e = exp(-r2);
    Sym3t<T> h = (T(1.0) + 0.3 * e) * Sym3t<T>::identity();
    T c = 0.15 * e;
    h.xx = h.xx + c * x.x * x.x;
    h.yy = h.yy + c * x.y * x.y;
    h.zz = h.zz + c * x.z * x.z;
    h.xy = h.xy + c * x.x * x.y;
    h.xz = h.xz + c * x.x * x.z;
    h.yz = h.yz + c * x.y * x.z;
    return h;
  }, tr);
}

DriftField bump_drift() {
  return make_drift("bumpX", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T e = T(0.4) * exp(-(x.x * x.x + x.y * x.y + x.z * x.z));
    return Vec3t<T>{e * x.x, e * x.y, e * x.z};
  }, 1.0, true);
}

DriftField coulomb_drift(double c) {
  return make_drift("coulomb", [c](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T ir3 = pow(r2, -1.5);
    return Vec3t<T>{c * x.x * ir3, c * x.y * ir3, c * x.z * ir3};
  }, 1.0, true);
}

Chart perturbed_flat_chart(double amp, double tau) {
  ChartTraits tr;
  tr.radial = true;
  tr.declared_tau = tau;
  return make_chart("perturbed_flat", [=](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T f = T(1.0) + amp * pow(T(1.0) + r2, -tau / 2.0);
    return f * Sym3t<T>::identity();
  }, tr);
}

// coefficient of the reduced second-order form u'' = c(r) u', taken from
// first-order metric jets on the axis; shares no code with the solver's
// quadrature route
double ode_coeff(const Chart& ch, const DriftField& X, double r) {
  auto j = metric_jets<1>(ch, {r, 0, 0});
  double al = j(0, 0).value(), dal = j(0, 0).deriv(1, 0, 0);
  double be = j(1, 1).value(), dbe = j(1, 1).deriv(1, 0, 0);
  double chi = X.zero ? 0.0 : X.value({r, 0, 0}).x;
  return 0.5 * al * chi - (dbe / be + 2.0 / r - 0.5 * dal / al);
}

struct ShootSamples {
  std::vector<double> r;
  std::vector<double> u;
};

// independent two-sided shooting: integrate u'' = c(r) u' outward from the
// boundary sphere (u = 0 there) and inward from r_far with 1 - B/r data,
// match value and slope at r_mid
ShootSamples two_sided_shoot(const Chart& ch, const DriftField& X, double r0,
                             double r_mid, double r_far,
                             const std::vector<double>& inner_samples,
                             const std::vector<double>& outer_samples) {
  auto rk_out = [&](double a, double b, double& u, double& v) {
    int n = std::max(64, int((b - a) / 2.5e-4) + 1);
    double h = (b - a) / n;
    for (int i = 0; i < n; ++i) {
      double r = a + i * h;
      auto f = [&](double rr, double vv) { return ode_coeff(ch, X, rr) * vv; };
      double k1u = v, k1v = f(r, v);
      double k2u = v + 0.5 * h * k1v, k2v = f(r + 0.5 * h, v + 0.5 * h * k1v);
      double k3u = v + 0.5 * h * k2v, k3v = f(r + 0.5 * h, v + 0.5 * h * k2v);
      double k4u = v + h * k3v, k4v = f(r + h, v + h * k3v);
      u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
      v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
  };
  // log-radius form for the outer branch: du/ds = w, dw/ds = w (1 + r c(r))
  auto rk_in = [&](double sa, double sb, double& u, double& w) {
    int n = std::max(64, int((sa - sb) / 4e-4) + 1);
    double h = (sa - sb) / n;
    for (int i = 0; i < n; ++i) {
      double s = sa - i * h;
      auto f = [&](double ss, double ww) {
        double rr = std::exp(ss);
        return ww * (1.0 + rr * ode_coeff(ch, X, rr));
      };
      double k1u = w, k1w = f(s, w);
      double k2u = w - 0.5 * h * k1w, k2w = f(s - 0.5 * h, w - 0.5 * h * k1w);
      double k3u = w - 0.5 * h * k2w, k3w = f(s - 0.5 * h, w - 0.5 * h * k2w);
      double k4u = w - h * k3w, k4w = f(s - h, w - h * k3w);
      u -= h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
      w -= h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    }
  };

  double u = 0, v = 1, prev = r0;
  std::vector<double> u_inner;
  for (double s : inner_samples) {
    rk_out(prev, s, u, v);
    u_inner.push_back(u);
    prev = s;
  }
  rk_out(prev, r_mid, u, v);
  double U_out = u, V_out = v;

  double ui = 1.0 - 1.0 / r_far, w = 1.0 / r_far, sprev = std::log(r_far);
  std::vector<double> u_outer;
  for (auto it = outer_samples.rbegin(); it != outer_samples.rend(); ++it) {
    rk_in(sprev, std::log(*it), ui, w);
    u_outer.push_back(ui);
    sprev = std::log(*it);
  }
  rk_in(sprev, std::log(r_mid), ui, w);
  double U_in = ui, W_in = w / r_mid;  // du/dr at the match point

  // lambda U_out = 1 + kappa (U_in - 1), lambda V_out = kappa W_in
  double kappa = 1.0 / (W_in * U_out / V_out - (U_in - 1.0));
  double lambda = kappa * W_in / V_out;

  ShootSamples out;
  for (size_t i = 0; i < inner_samples.size(); ++i) {
    out.r.push_back(inner_samples[i]);
    out.u.push_back(lambda * u_inner[i]);
  }
  for (size_t i = 0; i < outer_samples.size(); ++i) {
    out.r.push_back(outer_samples[i]);
    out.u.push_back(1.0 + kappa * (u_outer[outer_samples.size() - 1 - i] - 1.0));
  }
  return out;
}

}  // namespace

TEST_CASE("euclidean kernel: exact profile and far-field constants") {
  Chart ch = flat_chart();
  PotentialField pot = solve_radial(ch, zero_drift());

  REQUIRE(pot.rep == PotentialRep::radial_profile);
  REQUIRE(pot.has_pole);
  REQUIRE(pot.series_ok);
  CHECK(pot.series.max_table_entry() < 1e-14);
  CHECK(pot.regular_threshold == Approx(1e-8));

  for (double r : {0.02, 0.1, 0.7, 1.0, 3.3, 42.0, 977.0, 1e4}) {
    CHECK(std::abs(pot.value({r, 0, 0}) - (1.0 - 1.0 / r)) < 1e-10);
    CHECK(pot.value({0, r, 0}) < 1.0);
  }
  // deep in: relative to the 1/r size
  CHECK(std::abs(pot.value({1e-3, 0, 0}) - (1.0 - 1e3)) < 1e-12 * 1e3);

  CHECK(pot.far.ok);
  CHECK(pot.far.B == Approx(1.0).margin(1e-9));
  CHECK(pot.far.A == Approx(1.0 / (4.0 * M_PI)).margin(1e-10));
  CHECK(pot.far.residual < 1e-10);

  // derivative interpolation between nodes is one order below the values
  Vec3 g = pot.gradient({0.3, 0.4, 0.0});
  CHECK(norm(g - Vec3{2.4, 3.2, 0.0}) < 1e-7);

  NormalJets nj = normal_jets(ch, zero_drift(), {0, 0, 0});
  PoleMatch pm = pole_match_order(pot, nj, 0.1);
  CHECK(pm.ok);
  CHECK(pm.floored);
  CHECK(pm.q >= 3.5);
}

TEST_CASE("capped conformal chart: closed form, far fit, pole contact") {
  const double m = 1.0, rc = 1.0;
  Chart ch = capped_schw_chart(m, rc);
  DriftField X = zero_drift();
  PotentialField pot = solve_radial(ch, X);

  auto closed = [&](double r) { return 1.0 - 1.0 / (r + 0.5 * m); };
  for (double r : {1.0, 1.5, 2.7, 10.0, 300.0, 1e4})
    CHECK(std::abs(pot.value({0, 0, r}) - closed(r)) < 1e-9);

  CHECK(pot.far.ok);
  CHECK(std::abs(pot.far.B - 1.0) < 1e-5);
  std::vector<double> radii;
  for (int i = 0; i < 14; ++i) radii.push_back(1e3 * std::pow(1e2, i / 13.0));
  FarFit ff = far_field_fit(pot, radii, 1.0);
  REQUIRE(ff.ok);
  CHECK(std::abs(ff.B - 1.0) < 1e-6);
  CHECK(ff.A == Approx(ff.B / (4.0 * M_PI)));

  // full 3D operator on the hand-derived closed form
  for (double r : {1.2, 2.0, 5.0}) {
    for (Vec3 dir : {Vec3{1, 0, 0}, Vec3{0.36, 0.48, 0.8}}) {
      Vec3 x = r * dir;
      double up = 1.0 / ((r + 0.5) * (r + 0.5));
      double upp = -2.0 / ((r + 0.5) * (r + 0.5) * (r + 0.5));
      Vec3 grad;
      Sym3 hess;
      radial_scalar_jets(x, up, upp, grad, hess);
      CHECK(std::abs(drift_laplace_scalar(ch, X, x, grad, hess)) < 1e-11);
    }
  }
  // end-to-end residual through the interpolated profile
  double fd = drift_laplace_fd(ch, X, {1.2, 1.2, 0.8},
                               [&](const Vec3& p) { return pot.value(p); }, 0.02);
  CHECK(std::abs(fd) < 2e-6);

  NormalJets nj = normal_jets(ch, X, {0, 0, 0});
  PoleMatch pm = pole_match_order(pot, nj, 0.4);
  REQUIRE(pm.ok);
  CHECK(pm.q >= 3.5);
}

TEST_CASE("horizon boundary: closed form and two-sided shooting oracle") {
  const double m = 1.0;
  Chart ch = schw_horizon_chart(m);
  PotentialField pot = solve_radial(ch, zero_drift());

  REQUIRE_FALSE(pot.has_pole);
  REQUIRE_FALSE(pot.series_ok);
  CHECK(std::abs(pot.value({0.5, 0, 0})) < 1e-12);

  auto closed = [&](double r) { return (r - 0.5 * m) / (r + 0.5 * m); };
  for (double r : {0.56, 0.8, 1.5, 4.0, 30.0, 1e3})
    CHECK(std::abs(pot.value({r, 0, 0}) - closed(r)) < 1e-9);

  std::vector<double> inner = {0.55, 0.8, 1.5, 3.0, 7.0};
  std::vector<double> outer = {12.0, 60.0, 400.0, 3000.0};
  ShootSamples oracle = two_sided_shoot(ch, zero_drift(), 0.5, 8.0, 2e4, inner, outer);
  for (size_t i = 0; i < oracle.r.size(); ++i)
    CHECK(std::abs(pot.value({oracle.r[i], 0, 0}) - oracle.u[i]) < 1e-8);

  std::vector<double> radii;
  for (int i = 0; i < 14; ++i) radii.push_back(1e3 * std::pow(1e2, i / 13.0));
  FarFit ff = far_field_fit(pot, radii, 1.0);
  REQUIRE(ff.ok);
  CHECK(std::abs(ff.B - m) < 1e-6);  // kernel coefficient equals the mass here
}

TEST_CASE("radial drift: integrating-factor closed form") {
  const double c = 0.8, r0 = 1.0;
  Chart ch = flat_boundary_chart(r0);
  DriftField X = coulomb_drift(c);
  PotentialField pot = solve_radial(ch, X);

  const double denom = 1.0 - std::exp(-0.5 * c / r0);
  auto closed = [&](double r) {
    return (std::exp(-0.5 * c / r) - std::exp(-0.5 * c / r0)) / denom;
  };
  CHECK(std::abs(pot.value({r0, 0, 0})) < 1e-12);
  for (double r : {1.05, 1.25, 2.2, 6.0, 50.0, 2e3})
    CHECK(std::abs(pot.value({0, r, 0}) - closed(r)) < 1e-9);

  const double B_true = 0.5 * c / denom;
  CHECK(pot.far.ok);
  CHECK(std::abs(pot.far.B - B_true) < 1e-5);
  std::vector<double> radii;
  for (int i = 0; i < 14; ++i) radii.push_back(1e3 * std::pow(1e2, i / 13.0));
  FarFit ff = far_field_fit(pot, radii, 1.0);
  REQUIRE(ff.ok);
  CHECK(std::abs(ff.B - B_true) < 5e-7);

  // closed-form gradient/Hessian through the full 3D operator
  for (double r : {1.3, 3.0}) {
    Vec3 x = r * Vec3{0.6, 0.0, 0.8};
    double ee = std::exp(-0.5 * c / r) / denom;
    double up = ee * 0.5 * c / (r * r);
    double upp = ee * (0.25 * c * c / (r * r * r * r) - c / (r * r * r));
    Vec3 grad;
    Sym3 hess;
    radial_scalar_jets(x, up, upp, grad, hess);
    CHECK(std::abs(drift_laplace_scalar(ch, X, x, grad, hess)) < 1e-11);
  }
}

TEST_CASE("bump chart with smooth drift: invariants and operator residual") {
  Chart ch = bump_chart();
  DriftField X = bump_drift();
  PotentialField pot = solve_radial(ch, X);

  CHECK(pot.far.ok);
  CHECK(pot.far.B > 0);
  for (double r : {0.05, 0.3, 1.0, 8.0, 1e3}) CHECK(pot.value({r, 0, 0}) < 1.0);

  // reduction residual at grid nodes, where the stored derivative is exact:
  // build the Hessian from u'' = c(r) u' and push it through the 3D operator
  for (double rt : {0.3, 0.7, 1.4, 3.2}) {
    size_t i = pot.radial.interval(rt);
    double r = pot.radial.r[i], up = pot.radial.du[i];
    double upp = ode_coeff(ch, X, r) * up;
    for (Vec3 dir : {Vec3{1, 0, 0}, Vec3{0, 0, 1}, Vec3{0.6, 0.64, 0.48}}) {
      Vec3 x = r * normalized(dir);
      Vec3 grad;
      Sym3 hess;
      radial_scalar_jets(x, up, upp, grad, hess);
      double res = drift_laplace_scalar(ch, X, x, grad, hess);
      CHECK(std::abs(res) < 1e-9 * std::max(1.0, std::abs(upp)));
    }
  }

  double fd = drift_laplace_fd(ch, X, {0.528, 0.66, 0.704},
                               [&](const Vec3& p) { return pot.value(p); }, 3e-3);
  CHECK(std::abs(fd) < 1e-5);

  NormalJets nj = normal_jets(ch, X, {0, 0, 0});
  PoleMatch pm = pole_match_order(pot, nj, 0.4);
  REQUIRE(pm.ok);
  CHECK(pm.q >= 3.5);
}

TEST_CASE("barriers: exact flat signs, curved doubling search, sandwich") {
  Chart flat = flat_chart();
  DriftField z = zero_drift();
  const double eps = 0.25;

  SECTION("euclidean power laws are exact") {
    for (double r : {1.5, 3.0, 10.0}) {
      Vec3 x = r * Vec3{0.48, 0.64, 0.6};
      double expect = eps * (1.0 + eps) * std::pow(r, -3.0 - eps);
      CHECK(lx_barrier(flat, z, eps, +1, x) == Approx(-expect).epsilon(1e-12));
      CHECK(lx_barrier(flat, z, eps, -1, x) == Approx(expect).epsilon(1e-12));
    }
    BarrierPair bp = barrier_pair(flat, z, eps, 1.0 - 1e-6);
    REQUIRE(bp.ok);
    CHECK(bp.validated_radius == Approx(2.0));
    CHECK(bp.worst_plus < 0);
    CHECK(bp.worst_minus > 0);
  }

  SECTION("curved chart: doubling search against audited decay") {
    Chart ch = schw_horizon_chart(1.0);
    std::vector<double> radii;
    for (int i = 0; i < 8; ++i) radii.push_back(20.0 * std::pow(2.0, i));
    DecayAudit audit = decay_audit(ch, z, radii);
    REQUIRE(audit.pass);
    BarrierPair bp = barrier_pair(ch, z, eps, audit.tau_used);
    REQUIRE(bp.ok);
    CHECK(bp.validated_radius >= 2.0);
    CHECK(bp.validated_radius <= 65536.0);
    CHECK(bp.worst_plus < 0);
    CHECK(bp.worst_minus > 0);
  }

  SECTION("sandwich on the capped chart closed form") {
    Chart ch = capped_schw_chart(1.0, 1.0);
    PotentialField pot = solve_radial(ch, z);
    BarrierPair bp = barrier_pair(ch, z, eps, 1.0 - 1e-6);
    REQUIRE(bp.ok);
    SandwichReport rep = sandwich_check(pot, bp);
    REQUIRE(rep.ok);
    CHECK(rep.c_minus > 0);
    CHECK(rep.c_minus <= rep.c_plus);
    CHECK(rep.margin >= -1e-12);
    CHECK(rep.n_samples > 1000);
  }

  SECTION("epsilon outside (0, tau) rejected") {
    CHECK_THROWS_AS(barrier_pair(flat, z, 1.0, 1.0 - 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(barrier_pair(flat, z, -0.1, 1.0 - 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(barrier_pair(flat, z, 0.25, 0.2), std::invalid_argument);
  }
}

TEST_CASE("far-field model on a slowly decaying perturbation") {
  const double tau = 0.8;
  Chart ch = perturbed_flat_chart(0.01, tau);
  PotentialField pot = solve_radial(ch, zero_drift());
  CHECK(pot.far.ok);
  CHECK(pot.far.tau == Approx(tau));

  std::vector<double> radii;
  for (int i = 0; i < 14; ++i) radii.push_back(30.0 * std::pow(100.0, i / 13.0));
  FarFit ff = far_field_fit(pot, radii, tau);
  REQUIRE(ff.ok);

  // the residual term c r^{-tau} left after removing B must show the
  // declared slope
  std::vector<double> dev;
  for (double r : radii) dev.push_back((1.0 - pot.radial.value(r)) * r - ff.B);
  SlopeFit sf = loglog_slope(radii, dev);
  REQUIRE(sf.ok);
  CHECK(sf.slope == Approx(-tau).margin(0.06));
}

TEST_CASE("error paths") {
  DriftField z = zero_drift();

  Chart notradial = flat_chart(false);
  CHECK_THROWS_AS(solve_radial(notradial, z), std::invalid_argument);

  // radial chart that excludes the origin without declaring a boundary
  ChartTraits tr;
  tr.radial = true;
  tr.inner_radius = 1.0;
  Chart punctured = make_chart("punctured", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    return Sym3t<T>::identity();
  }, tr);
  CHECK_THROWS_AS(solve_radial(punctured, z), std::domain_error);

  Chart flat = flat_chart();
  DriftField skew = make_drift("skew", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    return Vec3t<T>{T(0.1), T(0.0), T(0.0)};
  }, 1.0);
  CHECK_THROWS_AS(solve_radial(flat, skew), std::invalid_argument);

  PotentialField pot = solve_radial(flat, z);
  CHECK_THROWS_AS(pot.radial.value(1e-6), std::domain_error);
  CHECK_THROWS_AS(far_field_fit(pot, {10.0, 5.0, 20.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(far_field_fit(pot, {10.0, 20.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(far_field_fit(pot, {10.0, 20.0, 40.0}, 0.0), std::invalid_argument);

  BarrierPair bad;
  CHECK_THROWS_AS(sandwich_check(pot, bad), std::invalid_argument);

  PotentialField bdry = solve_radial(schw_horizon_chart(1.0), z);
  NormalJets nj = normal_jets(flat, z, {0, 0, 0});
  CHECK_THROWS_AS(pole_match_order(bdry, nj, 0.1), std::logic_error);
}
