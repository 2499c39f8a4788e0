#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "driftmass/driftmass.hpp"

using namespace driftmass;

namespace {

Chart flat_chart() {
  ChartTraits tr;
  tr.inner_radius = 0.0;
  tr.declared_tau = 1.0;
  return make_chart("flat", [](const auto& x) {
    using std::decay_t;
    using T = decay_t<decltype(x.x)>;
    return Sym3t<T>::identity();
  }, tr);
}

// isotropic harmonic-factor chart (1 + m/2r)^4 delta
Chart schw_chart(double m, double tau = 1.0) {
  ChartTraits tr;
  tr.inner_radius = std::max(1.0, m);
  tr.declared_tau = tau;
  return make_chart("schw", [m](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r = sqrt(x.x * x.x + x.y * x.y + x.z * x.z);
    T phi = T(1.0) + (m / 2.0) * reciprocal(r);
    T w = phi * phi;
    w = w * w;
    return w * Sym3t<T>::identity();
  }, tr);
}

std::vector<double> log_radii(double r0, double r1, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i)
    out.push_back(r0 * std::pow(r1 / r0, double(i) / (n - 1)));
  return out;
}

}  // namespace

TEST_CASE("sphere quadrature integrates low-degree polynomials exactly") {
  auto q = make_sphere_quadrature();
  REQUIRE(q.degree == 23);
  REQUIRE(q.nodes.size() == 12 * 24);

  double total = 0;
  for (auto& n : q.nodes) total += n.w;
  CHECK(std::abs(total - 4.0 * M_PI) < 1e-12);

  for (int i = 0; i < 3; ++i) {
    double m1 = 0;
    for (auto& n : q.nodes) m1 += n.w * n.dir[i];
    CHECK(std::abs(m1) < 1e-12);
    for (int j = 0; j < 3; ++j) {
      double m2 = 0;
      for (auto& n : q.nodes) m2 += n.w * n.dir[i] * n.dir[j];
      double want = (i == j) ? 4.0 * M_PI / 3.0 : 0.0;
      CHECK(std::abs(m2 - want) < 1e-10);
    }
  }
}

TEST_CASE("spherical harmonics are orthonormal under the quadrature") {
  auto q = make_sphere_quadrature();
  // all pairs with l + l' <= 12 stay well inside the exactness degree
  for (int l = 0; l <= 6; ++l)
    for (int m = -l; m <= l; ++m)
      for (int lp = l; lp <= 6; ++lp)
        for (int mp = -lp; mp <= lp; ++mp) {
          double acc = 0;
          for (auto& n : q.nodes)
            acc += n.w * real_sph_harm(l, m, n.dir) * real_sph_harm(lp, mp, n.dir);
          double want = (l == lp && m == mp) ? 1.0 : 0.0;
          REQUIRE(std::abs(acc - want) < 1e-10);
        }
  // higher-l mean values vanish
  for (int l = 1; l <= 8; ++l)
    for (int m = -l; m <= l; ++m) {
      double acc = 0;
      for (auto& n : q.nodes) acc += n.w * real_sph_harm(l, m, n.dir);
      REQUIRE(std::abs(acc) < 1e-10);
    }
}

TEST_CASE("quadrature exactness degree is sharp") {
  auto q = make_sphere_quadrature();
  auto moment = [&](int k) {
    double acc = 0;
    for (auto& n : q.nodes) acc += n.w * std::pow(n.dir.x, k);
    return acc;
  };
  // integral of (x W dot e)^{2k} over the sphere is 4 pi / (2k + 1)
  CHECK(std::abs(moment(22) - 4.0 * M_PI / 23.0) < 1e-12);
  CHECK(std::abs(moment(24) - 4.0 * M_PI / 25.0) > 1e-9);  // degree 24 aliases
}

TEST_CASE("sphere_integral handles radius scaling and odd symmetry") {
  auto q = make_sphere_quadrature();
  double area = sphere_integral([](const Vec3&) { return 1.0; }, 2.0, q);
  CHECK(std::abs(area - 16.0 * M_PI) < 1e-10);
  double odd = sphere_integral([](const Vec3& x) { return x.x * x.y * x.z + x.z; }, 3.0, q);
  CHECK(std::abs(odd) < 1e-10);
  double quad2 = sphere_integral([](const Vec3& x) { return x.x * x.x / dot(x, x); }, 5.0, q);
  CHECK(std::abs(quad2 - 4.0 * M_PI / 3.0 * 25.0) < 1e-9);
}

TEST_CASE("flat chart with no drift has zero mass") {
  auto q = make_sphere_quadrature();
  auto est = x_adm_mass(flat_chart(), zero_drift(), log_radii(10, 200, 6), q);
  CHECK(est.kind == MassKind::adm);
  CHECK(est.converged);
  CHECK(std::abs(est.extrapolated) < 1e-10);
  for (auto& pr : est.per_radius) CHECK(std::abs(pr.second) < 1e-12);
}

TEST_CASE("radial inverse-square drift contributes its flux exactly") {
  auto q = make_sphere_quadrature();
  double c = 0.8;
  auto X = make_drift("radial", [c](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T s = reciprocal(sqrt(r2) * r2);
    return Vec3t<T>{c * x.x * s, c * x.y * s, c * x.z * s};
  }, 1.0, true);

  Vec3 pt{2.0, 0.0, 0.0};
  CHECK(std::abs(mass_integrand(flat_chart(), X, pt) - 2.0 * c / 4.0) < 1e-14);

  auto est = x_adm_mass(flat_chart(), X, log_radii(5, 80, 5), q);
  CHECK(est.kind == MassKind::x_adm);
  CHECK(est.converged);
  CHECK(std::abs(est.extrapolated - c / 2.0) < 1e-12);
  for (auto& pr : est.per_radius) CHECK(std::abs(pr.second - c / 2.0) < 1e-13);
}

TEST_CASE("harmonic-factor chart recovers its mass parameter") {
  auto q = make_sphere_quadrature();
  double m = 1.0;
  auto est = x_adm_mass(schw_chart(m), zero_drift(), log_radii(10, 1000, 8), q);
  CHECK(est.kind == MassKind::adm);
  CHECK(est.converged);
  CHECK(std::abs(est.extrapolated - m) < 5e-3);
  // per-radius value for this chart is m (1 + m/2r)^3
  for (auto& pr : est.per_radius) {
    double phi = 1.0 + m / (2.0 * pr.first);
    CHECK(std::abs(pr.second - m * phi * phi * phi) < 1e-10);
  }
  // negative parameter comes out negative
  auto neg = x_adm_mass(schw_chart(-0.5), zero_drift(), log_radii(10, 1000, 8), q);
  CHECK(std::abs(neg.extrapolated + 0.5) < 5e-3);
}

TEST_CASE("total charge of a Coulomb field, with and without a curl blur") {
  auto q = make_sphere_quadrature();
  double Q = 0.5;
  auto coulomb = [Q](const Vec3& x) {
    double r = norm(x);
    return (Q / (r * r * r)) * x;
  };
  auto est = total_charge(coulomb, log_radii(2, 50, 5), q);
  CHECK(est.kind == MassKind::charge);
  CHECK(est.converged);
  CHECK(std::abs(est.extrapolated - Q) < 1e-12);
  for (auto& pr : est.per_radius) CHECK(std::abs(pr.second - Q) < 1e-13);

  // add a divergence-free curl field; closed-surface flux is unchanged
  auto blurred = [&](const Vec3& x) {
    double d = x.x * x.x + x.y * x.y + x.z * x.z + 1.0;
    Vec3 curl{-2.0 * x.y / (d * d), 2.0 * x.x / (d * d), 0.0};
    return coulomb(x) + curl;
  };
  auto est2 = total_charge(blurred, log_radii(2, 50, 5), q);
  CHECK(std::abs(est2.extrapolated - Q) < 1e-6);

  auto zero = total_charge([](const Vec3&) { return Vec3{0, 0, 0}; }, log_radii(2, 50, 5), q);
  CHECK(std::abs(zero.extrapolated) < 1e-14);
}

TEST_CASE("mass is affine in the drift field") {
  auto q = make_sphere_quadrature();
  auto X1 = make_drift("a", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T s = reciprocal(sqrt(r2) * r2);
    return Vec3t<T>{T(0.3) * x.x * s, T(0.3) * x.y * s, T(0.3) * x.z * s};
  }, 1.0, true);
  auto X2 = make_drift("b", [](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T w = reciprocal(r2 * r2);
    return Vec3t<T>{x.y * w, -x.x * w, T(0.1) * x.z * w};
  }, 1.0);
  CHECK(mass_linearity_check(schw_chart(0.7), X1, X2, log_radii(8, 120, 5), q) < 1e-8);
  CHECK(mass_linearity_check(flat_chart(), X1, X2, log_radii(8, 120, 5), q) < 1e-10);
}

TEST_CASE("drift mass equals plain mass minus charge for electric drift") {
  auto q = make_sphere_quadrature();
  double m = 1.0, Qc = 0.4;
  auto chart = schw_chart(m);
  // X = -2 E with a Coulomb electric field E = Q x / |x|^3
  auto X = make_drift("electric", [Qc](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T r2 = x.x * x.x + x.y * x.y + x.z * x.z;
    T s = reciprocal(sqrt(r2) * r2);
    return Vec3t<T>{-2.0 * Qc * x.x * s, -2.0 * Qc * x.y * s, -2.0 * Qc * x.z * s};
  }, 1.0, true);
  auto radii = log_radii(10, 1000, 8);
  auto m_x = x_adm_mass(chart, X, radii, q);
  auto m_adm = x_adm_mass(chart, zero_drift(), radii, q);
  auto charge = total_charge(
      [Qc](const Vec3& x) {
        double r = norm(x);
        return (Qc / (r * r * r)) * x;
      },
      radii, q);
  CHECK(m_x.converged);
  CHECK(std::abs(m_x.extrapolated - (m_adm.extrapolated - charge.extrapolated)) < 1e-8);
  // and the drift-only part of each per-radius value is exactly -Q
  for (size_t i = 0; i < radii.size(); ++i)
    CHECK(std::abs(m_x.per_radius[i].second - m_adm.per_radius[i].second + Qc) < 1e-12);
}

TEST_CASE("mass sweeps reject bad radius lists") {
  auto q = make_sphere_quadrature();
  auto ch = flat_chart();
  CHECK_THROWS_AS(x_adm_mass(ch, zero_drift(), {10, 20, 30}, q), std::invalid_argument);
  CHECK_THROWS_AS(x_adm_mass(ch, zero_drift(), {10, 20, 30, 25}, q), std::invalid_argument);
  CHECK_THROWS_AS(x_adm_mass(ch, zero_drift(), {10, 20, 40, 80}, q), std::invalid_argument);
}

TEST_CASE("mass estimate is rotation invariant") {
  auto q = make_sphere_quadrature();
  // anisotropic decaying perturbation centered off the origin
  double A = 0.05, tau = 0.75;
  Vec3 c{0.4, -0.3, 0.2};
  auto base = [A, tau, c](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    T dx = x.x - c.x, dy = x.y - c.y, dz = x.z - c.z;
    T P = dx * dx + dy * dy + dz * dz + T(4.0);
    T f = A * pow(P, -tau / 2.0);
    auto h = Sym3t<T>::identity();
    h.xx = T(1.0) + f * dx * dx * reciprocal(P);
    h.yy = T(1.0) + f * dy * dy * reciprocal(P);
    h.zz = T(1.0) + f;
    h.xy = f * dx * dy * reciprocal(P);
    h.xz = T(0.5) * f * dx * dz * reciprocal(P);
    h.yz = T(0.0);
    return h;
  };
  ChartTraits tr;
  tr.inner_radius = 0.0;
  tr.declared_tau = 0.75;
  auto chart = make_chart("bump", base, tr);

  // Rodrigues rotation, 0.7 rad about (1,2,3)
  Vec3 axis = normalized(Vec3{1, 2, 3});
  double ang = 0.7, cs = std::cos(ang), sn = std::sin(ang);
  Mat3 R;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double kij = (i == 0 && j == 1)   ? -axis.z
                   : (i == 0 && j == 2) ? axis.y
                   : (i == 1 && j == 0) ? axis.z
                   : (i == 1 && j == 2) ? -axis.x
                   : (i == 2 && j == 0) ? -axis.y
                   : (i == 2 && j == 1) ? axis.x
                                        : 0.0;
      R.a[i][j] = (i == j ? cs : 0.0) + sn * kij + (1 - cs) * axis[i] * axis[j];
    }
  auto rot_chart = make_chart("bump_rot", [base, R](const auto& x) {
    using T = std::decay_t<decltype(x.x)>;
    Vec3t<T> y{R.a[0][0] * x.x + R.a[0][1] * x.y + R.a[0][2] * x.z,
               R.a[1][0] * x.x + R.a[1][1] * x.y + R.a[1][2] * x.z,
               R.a[2][0] * x.x + R.a[2][1] * x.y + R.a[2][2] * x.z};
    auto G = base(y);
    Sym3t<T> out;
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) {
        T acc(0.0);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) acc = acc + R.a[i][a] * G(i, j) * R.a[j][b];
        if (a == 0 && b == 0) out.xx = acc;
        if (a == 0 && b == 1) out.xy = acc;
        if (a == 0 && b == 2) out.xz = acc;
        if (a == 1 && b == 1) out.yy = acc;
        if (a == 1 && b == 2) out.yz = acc;
        if (a == 2 && b == 2) out.zz = acc;
      }
    return out;
  }, tr);

  auto radii = log_radii(10, 150, 5);
  auto e1 = x_adm_mass(chart, zero_drift(), radii, q);
  auto e2 = x_adm_mass(rot_chart, zero_drift(), radii, q);
  REQUIRE(e1.per_radius.size() == e2.per_radius.size());
  for (size_t i = 0; i < e1.per_radius.size(); ++i)
    CHECK(std::abs(e1.per_radius[i].second - e2.per_radius[i].second) < 1e-10);
  CHECK(std::abs(e1.extrapolated - e2.extrapolated) < 1e-10);
}
