#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "hflow/errors.hpp"
#include "hflow/surface.hpp"

using namespace hflow;

namespace {

constexpr double kPi = std::numbers::pi;

double sup_matrix(const std::vector<Eigen::Matrix2d>& m) {
  double s = 0.0;
  for (const auto& a : m) s = std::max(s, a.cwiseAbs().maxCoeff());
  return s;
}

double sup_alpha(const OneFormField& a) { return std::max(sup_norm(a.theta), sup_norm(a.phi)); }

std::size_t node(const SurfaceGrid& g, int i, int j) { return static_cast<std::size_t>(i) * g.n_phi() + j; }

const SurfaceFamilySpec kBumpy = SurfaceFamilySpec::radial_graph(1.0, {{2, 0, 0.08}, {3, 2, -0.05}, {1, -1, 0.04}});

double frame_error(const ExtrinsicData& x) {
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Mat4& g = x.metric[k];
    const Vec4& n = x.frame.nu[k];
    const Vec4& p = x.frame.nu_perp[k];
    worst = std::max({worst, std::abs(n.dot(g * n) - 1.0), std::abs(p.dot(g * p) + 1.0), std::abs(n.dot(g * p)),
                      std::abs(n.dot(g * x.e_theta[k])), std::abs(n.dot(g * x.e_phi[k])),
                      std::abs(p.dot(g * x.e_theta[k])), std::abs(p.dot(g * x.e_phi[k]))});
  }
  return worst;
}

}  // namespace

TEST_CASE("build_surface nodes") {
  const auto flat = Spacetime::minkowski();
  // even n_theta has no node on the equator; use the exact embedding formula instead
  const auto spec = SurfaceFamilySpec::round_sphere(2.0);
  const Vec4 e = spec.embed(kPi / 2, 0.0);
  CHECK((e - Vec4(0, 2, 0, 0)).norm() <= 1e-15);
  const Vec4 pole = SurfaceFamilySpec::ellipsoid(1, 1, 2).embed(0.0, 0.0);
  CHECK((pole - Vec4(0, 0, 0, 2)).norm() <= 1e-15);

  const double eps = 0.1;
  const auto tp = SurfaceFamilySpec::time_perturbed(SurfaceFamilySpec::round_sphere(1.0), {{2, 0, eps}});
  const SurfaceGrid g = build_surface(tp, flat, 16, 32);
  for (int i = 0; i < 16; ++i)
    CHECK(g.events[node(g, i, 3)][0] ==
          doctest::Approx(eps * SphereBasis::real_ylm(2, 0, g.basis->theta(i), 0.0)).epsilon(1e-14));

  const SurfaceGrid r = build_surface(spec, flat, 16, 32);
  for (const auto& ev : r.events) CHECK(ev.tail<3>().norm() == doctest::Approx(2.0).epsilon(1e-14));

  CHECK_THROWS_AS(build_surface(SurfaceFamilySpec::round_sphere(-1.0), flat, 16, 32), DegenerateSpec);
  CHECK_THROWS_AS(build_surface(SurfaceFamilySpec::ellipsoid(1, 0, 1), flat, 16, 32), DegenerateSpec);
  CHECK_THROWS_AS(build_surface(SurfaceFamilySpec::radial_graph(0.1, {{1, 0, 1.0}}), flat, 16, 32), DegenerateSpec);
  CHECK_THROWS_AS(build_surface(SurfaceFamilySpec::round_sphere(1.0), Spacetime::schwarzschild(1.0), 16, 32),
                  OutOfChart);
  CHECK_THROWS_AS(build_surface(spec, flat, 8, 32), ConfigError);

  std::ostringstream csv;
  r.write_csv(csv);
  CHECK(csv.str().rfind("i,j,theta,phi,t,x1,x2,x3\n", 0) == 0);
}

TEST_CASE("round sphere in Minkowski") {
  const auto flat = Spacetime::minkowski();
  for (double radius : {1.0, 3.0}) {
    const auto x = extrinsic_geometry(build_surface(SurfaceFamilySpec::round_sphere(radius), flat, 16, 32), flat);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(x.H_sq[k] == doctest::Approx(4 / (radius * radius)).epsilon(1e-12));
    CHECK(sup_alpha(x.alpha) <= 1e-12);
    CHECK(sup_matrix(x.ring_II_r) <= 1e-12 * radius);
    CHECK(sup_matrix(x.ring_II_t) <= 1e-12);
    CHECK(x.total_area() == doctest::Approx(4 * kPi * radius * radius).epsilon(1e-12));
    // nu is outward
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(x.frame.nu[k].tail<3>().dot(x.events[k].tail<3>()) > 0.0);
  }
}

TEST_CASE("round sphere in Schwarzschild") {
  const double m = 1.0;
  for (double r : {3.0, 5.0}) {
    const auto st = Spacetime::schwarzschild(m);
    const auto x = extrinsic_geometry(build_surface(SurfaceFamilySpec::round_sphere(r), st, 16, 32), st);
    const double expected = 2.0 / r * std::sqrt(1 - 2 * m / r);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(x.H[k] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(sup_alpha(x.alpha) == 0.0);
  }
}

TEST_CASE("surfaces in the Minkowski time slice") {
  const auto flat = Spacetime::minkowski();
  for (const auto& spec : {kBumpy, SurfaceFamilySpec::ellipsoid(1, 1.2, 2)}) {
    const auto x = extrinsic_geometry(build_surface(spec, flat, 32, 64), flat);
    CHECK(sup_alpha(x.alpha) <= 1e-12);
    CHECK(sup_matrix(x.II_t) <= 1e-12);
  }
}

TEST_CASE("frame orthonormality") {
  const auto tp = SurfaceFamilySpec::time_perturbed(kBumpy, {{2, 1, 0.1}, {1, 0, 0.05}});
  SUBCASE("minkowski") {
    const auto x = extrinsic_geometry(build_surface(tp, Spacetime::minkowski(), 32, 64), Spacetime::minkowski());
    CHECK(frame_error(x) <= 1e-10);
  }
  SUBCASE("schwarzschild") {
    auto spec = tp;
    spec.radius = 4.0;
    const auto st = Spacetime::schwarzschild(1.0);
    const auto x = extrinsic_geometry(build_surface(spec, st, 32, 64), st);
    CHECK(frame_error(x) <= 1e-10);
    for (std::size_t k = 0; k < x.size(); ++k) {
      CHECK(x.frame.nu_perp[k][0] > 0.0);
      CHECK(x.frame.nu[k].dot(x.metric[k] * x.H_vec[k]) == doctest::Approx(-x.H[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("perp rotation") {
  const auto tp = SurfaceFamilySpec::time_perturbed(kBumpy, {{2, 0, 0.1}});
  const auto st = Spacetime::minkowski();
  const auto x = extrinsic_geometry(build_surface(tp, st, 16, 32), st);
  for (std::size_t k = 0; k < x.size(); k += 7) {
    const Mat4& g = x.metric[k];
    CHECK((perp_rotate(x, k, x.frame.nu[k]) - x.frame.nu_perp[k]).norm() <= 1e-14);
    const Vec4 v = 0.3 * x.frame.nu[k] - 1.7 * x.frame.nu_perp[k];
    const Vec4 pv = perp_rotate(x, k, v);
    CHECK((perp_rotate(x, k, pv) - v).norm() <= 1e-12);
    CHECK(std::abs(pv.dot(g * pv) + v.dot(g * v)) <= 1e-12);
    CHECK(std::abs(pv.dot(g * v)) <= 1e-12);
    const Vec4 hp = perp_rotate(x, k, x.H_vec[k]);
    CHECK(hp[0] < 0.0);  // past directed
    CHECK(hp.dot(g * hp) == doctest::Approx(-x.H_sq[k]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(perp_rotate(x, 0, x.e_theta[0]), NotNormal);
}

TEST_CASE("rotated frame transform law") {
  const auto tp = SurfaceFamilySpec::time_perturbed(kBumpy, {{2, 1, 0.1}, {3, -2, 0.04}});
  const auto st = Spacetime::schwarzschild(0.3);
  auto spec = tp;
  spec.radius = 2.0;
  const auto x = extrinsic_geometry(build_surface(spec, st, 32, 64), st);
  CHECK(sup_alpha(x.alpha) > 1e-3);

  const auto same = rotated_frame(x, ScalarField(x.size(), 0.0));
  CHECK(std::max(sup_norm(same.alpha.theta), sup_norm(same.alpha.phi)) <= sup_alpha(x.alpha) + 1e-15);
  const auto cst = rotated_frame(x, ScalarField(x.size(), 0.4));
  double worst_const = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    worst_const = std::max({worst_const, std::abs(cst.alpha.theta[k] - x.alpha.theta[k]),
                            std::abs(cst.alpha.phi[k] - x.alpha.phi[k])});
  CHECK(worst_const <= 1e-10);

  ScalarField f(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) f[k] = 0.3 * std::sin(x.events[k][1]) + 0.2 * x.events[k][3] * x.events[k][2];
  const auto rot = rotated_frame(x, f);
  const OneFormField df = differential(f, x);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    worst = std::max({worst, std::abs(rot.alpha.theta[k] + df.theta[k] - x.alpha.theta[k]),
                      std::abs(rot.alpha.phi[k] + df.phi[k] - x.alpha.phi[k])});
  CHECK(worst <= 1e-10);
}

TEST_CASE("admissibility") {
  const auto flat = Spacetime::minkowski();
  const auto unit = extrinsic_geometry(build_surface(SurfaceFamilySpec::round_sphere(1.0), flat, 16, 32), flat);
  const auto ok = admissibility_check(unit);
  CHECK(ok.pass);
  CHECK(ok.min_H_sq == doctest::Approx(4.0).epsilon(1e-12));

  // the horizon sphere of the isotropic chart is minimal in a time-symmetric slice
  const double m = 2.0;
  const auto iso = Spacetime::schwarzschild_isotropic(m, 1e-9);
  GeometryOptions unchecked;
  unchecked.check_admissible = false;
  const auto horizon = extrinsic_geometry(
      build_surface(SurfaceFamilySpec::round_sphere(0.5 * m * (1 + 1e-7)), iso, 16, 32), iso, unchecked);
  CHECK_FALSE(admissibility_check(horizon).pass);
  CHECK_THROWS_AS(extrinsic_geometry(build_surface(SurfaceFamilySpec::round_sphere(0.5 * m * (1 + 1e-7)), iso, 16, 32), iso),
                  NotAdmissible);

  // a growing timelike squiggle eventually makes H null somewhere
  double first_fail = -1.0;
  for (int step = 1; step <= 40 && first_fail < 0.0; ++step) {
    const double eps = 0.05 * step;
    const auto spec = SurfaceFamilySpec::time_perturbed(SurfaceFamilySpec::round_sphere(1.0), {{2, 0, eps}});
    const auto x = extrinsic_geometry(build_surface(spec, flat, 32, 64), flat, unchecked);
    if (!admissibility_check(x).pass) first_fail = eps;
  }
  INFO("first failing eps = " << first_fail);
  CHECK(first_fail > 0.05);
}

TEST_CASE("Gauss-Bonnet") {
  const auto flat = Spacetime::minkowski();
  const auto schw = Spacetime::schwarzschild(1.0);
  const auto ds = Spacetime::de_sitter_static(5.0);
  auto shifted = kBumpy;
  shifted.radius = 3.0;
  shifted.center = {0.3, -0.2, 0.1};
  for (const auto* st : {&flat, &schw, &ds}) {
    const auto tp = SurfaceFamilySpec::time_perturbed(shifted, {{2, 1, 0.2}});
    const auto x = extrinsic_geometry(build_surface(tp, *st, 32, 64), *st);
    CHECK(std::abs(integrate(x.gauss_K, x) - 4 * kPi) <= 1e-8);
    CHECK(euler_characteristic(x).chi == 2);
  }
  // the sectional curvature enters with a positive sign: a totally geodesic
  // sphere of the static de Sitter slice does not exist, but a round sphere
  // there has K = 1/r^2 in the induced metric of area radius r
  const auto x = extrinsic_geometry(build_surface(SurfaceFamilySpec::round_sphere(2.0), ds, 16, 32), ds);
  const double area_radius_sq = x.total_area() / (4 * kPi);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(x.gauss_K[k] == doctest::Approx(1 / area_radius_sq).epsilon(1e-11));
}

TEST_CASE("trace identities converge") {
  const auto st = Spacetime::schwarzschild(0.5);
  auto spec = SurfaceFamilySpec::time_perturbed(SurfaceFamilySpec::ellipsoid(2.0, 2.3, 2.6), {{2, 1, 0.1}});
  GeometryOptions opt;
  opt.trace_residuals = true;
  std::vector<double> err;
  for (int n : {16, 24, 32}) {
    const auto x = extrinsic_geometry(build_surface(spec, st, n, 2 * n), st, opt);
    err.push_back(std::max(sup_norm(x.trace_residual_r), sup_norm(x.trace_residual_t)));
    // the trace of the traceless parts vanishes to roundoff
    for (std::size_t k = 0; k < x.size(); k += 13) {
      CHECK(std::abs((x.h_inv[k].cwiseProduct(x.ring_II_r[k])).sum()) <= 1e-13);
      CHECK(std::abs((x.h_inv[k].cwiseProduct(x.II_r[k])).sum() - x.H[k]) <= 1e-13);
    }
  }
  INFO("errors " << err[0] << " " << err[1] << " " << err[2]);
  const double floor = 1e-12;
  for (int k = 1; k < 3; ++k) {
    if (err[k] <= floor) continue;
    const double order = std::log(err[k - 1] / err[k]) / std::log((k == 1 ? 24.0 : 32.0) / (k == 1 ? 16.0 : 24.0));
    CHECK(order >= 6.0);
  }
}

TEST_CASE("reparametrization invariance") {
  const auto st = Spacetime::schwarzschild(1.0);
  auto spec = SurfaceFamilySpec::time_perturbed(kBumpy, {{2, 1, 0.1}});
  spec.radius = 4.0;
  const auto a = extrinsic_geometry(build_surface(spec, st, 32, 64), st);
  spec.rotation = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto b = extrinsic_geometry(build_surface(spec, st, 32, 64), st);
  CHECK(std::abs(a.total_area() - b.total_area()) <= 1e-9 * a.total_area());
  CHECK(std::abs(integrate(a.H_sq, a) - integrate(b.H_sq, b)) <= 1e-9);
  CHECK(std::abs(integrate(norm2(a.alpha, a), a) - integrate(norm2(b.alpha, b), b)) <= 1e-9);
}

TEST_CASE("mesh quality") {
  const auto flat = Spacetime::minkowski();
  const auto x = extrinsic_geometry(build_surface(SurfaceFamilySpec::round_sphere(2.0), flat, 16, 32), flat);
  CHECK(mesh_quality(x) == doctest::Approx(1.0).epsilon(1e-12));
  const auto e = extrinsic_geometry(build_surface(SurfaceFamilySpec::ellipsoid(1, 1, 2), flat, 16, 32), flat);
  CHECK(mesh_quality(e) < 0.9);
}
