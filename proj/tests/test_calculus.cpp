#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hflow/calculus.hpp"
#include "hflow/errors.hpp"
#include "hflow/surface.hpp"

using namespace hflow;

namespace {

constexpr double kPi = std::numbers::pi;

ExtrinsicData geometry_of(const SurfaceFamilySpec& spec, int nt = 32, int np = 64,
                          const Spacetime& st = Spacetime::minkowski()) {
  return extrinsic_geometry(build_surface(spec, st, nt, np), st);
}

// Smooth random field: low-order polynomial of the embedding plus an exponential.
ScalarField random_smooth(const ExtrinsicData& x, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double a = n(rng), b = n(rng), c = n(rng), d = n(rng), e = 0.3 * n(rng);
  ScalarField f(x.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const Vec4& p = x.events[k];
    f[k] = a * p[1] + b * p[2] * p[3] + c * p[3] * p[3] + d * std::exp(e * p[1] - 0.2 * p[2]);
  }
  return f;
}

double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

const SurfaceFamilySpec kBumpy =
    SurfaceFamilySpec::radial_graph(1.0, {{2, 0, 0.08}, {3, 2, -0.05}, {4, -3, 0.03}, {1, 1, 0.04}});

}  // namespace

TEST_CASE("integration") {
  for (double r : {1.0, 2.5}) {
    const auto x = geometry_of(SurfaceFamilySpec::round_sphere(r), 16, 32);
    CHECK(integrate(ScalarField(x.size(), 1.0), x) == doctest::Approx(4 * kPi * r * r).epsilon(1e-12));
    CHECK(std::abs(x.total_area() - 4 * kPi * r * r) <= 1e-10);
  }
  const auto unit = geometry_of(SurfaceFamilySpec::round_sphere(1.0), 16, 32);
  CHECK(std::abs(integrate(harmonic_field(*unit.basis, 1, 0), unit)) <= 1e-10);
}

TEST_CASE("gradient, divergence and laplacian") {
  const auto unit = geometry_of(SurfaceFamilySpec::round_sphere(1.0));
  const auto g = gradient(ScalarField(unit.size(), 3.0), unit);
  CHECK(sup_norm(g.theta) <= 1e-11);
  CHECK(sup_norm(g.phi) <= 1e-11);

  const ScalarField y10 = harmonic_field(*unit.basis, 1, 0);
  ScalarField expected(y10);
  for (double& v : expected) v *= -2.0;
  CHECK(max_abs_diff(laplacian(y10, unit), expected) <= 1e-6);

  std::mt19937_64 rng(0xC0FFEE);
  for (const auto& spec : {SurfaceFamilySpec::ellipsoid(1.0, 1.3, 0.8), kBumpy}) {
    const auto x = geometry_of(spec);
    for (int trial = 0; trial < 3; ++trial) {
      const TangentVectorField v = gradient(random_smooth(x, rng), x);
      TangentVectorField w{v.phi, v.theta};  // not a gradient field
      CHECK(std::abs(integrate(divergence(w, x), x)) <= 1e-8);
      CHECK(std::abs(integrate(divergence(v, x), x)) <= 1e-8);
    }
  }
}

TEST_CASE("raise and lower are inverse") {
  const auto x = geometry_of(SurfaceFamilySpec::ellipsoid(1.0, 1.2, 2.0));
  std::mt19937_64 rng(2);
  const OneFormField w = differential(random_smooth(x, rng), x);
  const OneFormField back = lower(raise(w, x), x);
  const double scale = std::max(sup_norm(w.theta), sup_norm(w.phi));
  CHECK(max_abs_diff(back.theta, w.theta) <= 1e-12 * scale);
  CHECK(max_abs_diff(back.phi, w.phi) <= 1e-12 * scale);
}

TEST_CASE("laplacian is self-adjoint") {
  std::mt19937_64 rng(3);
  for (const auto& spec : {SurfaceFamilySpec::ellipsoid(1.0, 1.3, 0.8), kBumpy}) {
    const auto x = geometry_of(spec);
    const ScalarField f = random_smooth(x, rng), g = random_smooth(x, rng);
    const ScalarField lf = laplacian(f, x), lg = laplacian(g, x);
    ScalarField a(x.size()), b(x.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = f[k] * lg[k];
      b[k] = g[k] * lf[k];
    }
    const double ia = integrate(a, x), ib = integrate(b, x);
    CHECK(std::abs(ia - ib) <= 1e-8 * std::max(1.0, std::abs(ia)));
  }
}

TEST_CASE("product rule identity") {
  // int Q'(beta) <Z, grad beta> = -int Q(beta) div Z
  std::mt19937_64 rng(4);
  const auto x = geometry_of(kBumpy);
  for (int trial = 0; trial < 3; ++trial) {
    const ScalarField beta = random_smooth(x, rng);
    const ScalarField zf = random_smooth(x, rng);
    const TangentVectorField zg = gradient(zf, x);
    const TangentVectorField z{zg.phi, zg.theta};
    const OneFormField dbeta = differential(beta, x);
    const ScalarField divz = divergence(z, x);
    ScalarField lhs(x.size()), rhs(x.size());
    for (std::size_t k = 0; k < lhs.size(); ++k) {
      const double q = std::sin(0.7 * beta[k]), dq = 0.7 * std::cos(0.7 * beta[k]);
      lhs[k] = dq * (z.theta[k] * dbeta.theta[k] + z.phi[k] * dbeta.phi[k]);
      rhs[k] = -q * divz[k];
    }
    CHECK(std::abs(integrate(lhs, x) - integrate(rhs, x)) <= 1e-8);
  }
}

TEST_CASE("integration by parts with the mean curvature") {
  // int H lap(1/H) = int |grad H / H|^2
  for (const auto& spec : {SurfaceFamilySpec::ellipsoid(1.0, 1.3, 0.8), kBumpy}) {
    const auto x = geometry_of(spec);
    ScalarField inv(x.size());
    for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / x.H[k];
    const ScalarField l = laplacian(inv, x);
    const ScalarField g2 = norm2(differential(x.H, x), x);
    ScalarField a(x.size()), b(x.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = x.H[k] * l[k];
      b[k] = g2[k] / (x.H[k] * x.H[k]);
    }
    const double ia = integrate(a, x), ib = integrate(b, x);
    CHECK(ib > 0.0);
    CHECK(std::abs(ia - ib) <= 1e-8 * std::abs(ib));
  }
}

TEST_CASE("poisson eigenfunction") {
  const auto unit = geometry_of(SurfaceFamilySpec::round_sphere(1.0));
  const ScalarField y20 = harmonic_field(*unit.basis, 2, 0);
  const PoissonResult r = poisson_solve(y20, unit);
  ScalarField expected(y20);
  for (double& v : expected) v /= -6.0;
  CHECK(max_abs_diff(r.solution, expected) <= 1e-6);
  CHECK(r.residual_inf <= 1e-8 * sup_norm(y20));
  CHECK(std::abs(mean(r.solution, unit)) <= 1e-14);
}

TEST_CASE("poisson edge cases") {
  const auto unit = geometry_of(SurfaceFamilySpec::round_sphere(1.0), 16, 32);
  const PoissonResult zero = poisson_solve(ScalarField(unit.size(), 0.0), unit);
  CHECK(sup_norm(zero.solution) == 0.0);
  CHECK(zero.iterations == 0);

  // integral of f equal to a tenth of its L1 norm: f = Y10 + c with c by bisection
  const ScalarField y10 = harmonic_field(*unit.basis, 1, 0);
  auto ratio = [&](double c) {
    double i = 0.0, a = 0.0;
    for (std::size_t k = 0; k < y10.size(); ++k) {
      i += (y10[k] + c) * unit.dA[k];
      a += std::abs(y10[k] + c) * unit.dA[k];
    }
    return i / a;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) (ratio(0.5 * (lo + hi)) < 0.1 ? lo : hi) = 0.5 * (lo + hi);
  ScalarField f(y10);
  for (double& v : f) v += lo;
  CHECK(ratio(lo) == doctest::Approx(0.1).epsilon(1e-9));
  CHECK_THROWS_AS(poisson_solve(f, unit), Incompatible);

  PoissonOptions tight;
  tight.max_iterations = 1;
  std::mt19937_64 rng(9);
  const auto ell = geometry_of(SurfaceFamilySpec::ellipsoid(1.0, 1.5, 2.0), 16, 32);
  CHECK_THROWS_AS(poisson_solve(laplacian(random_smooth(ell, rng), ell), ell, tight), NoConvergence);
}

TEST_CASE("poisson residual on curved surfaces") {
  std::mt19937_64 rng(6);
  for (const auto& spec : {SurfaceFamilySpec::ellipsoid(1.0, 1.3, 0.8), kBumpy, SurfaceFamilySpec::ellipsoid(1, 1, 2)}) {
    const auto x = geometry_of(spec);
    const ScalarField u = random_smooth(x, rng);
    const ScalarField f = laplacian(u, x);
    const PoissonResult r = poisson_solve(f, x);
    CHECK(r.residual_inf <= 1e-8 * sup_norm(f));
    // recovers u up to a constant
    const double shift = mean(u, x);
    ScalarField u0(u);
    for (double& v : u0) v -= shift;
    CHECK(max_abs_diff(r.solution, u0) <= 1e-7 * sup_norm(u0));
  }
}

TEST_CASE("euler characteristic") {
  CHECK(euler_characteristic(geometry_of(SurfaceFamilySpec::round_sphere(1.0))).chi == 2);
  const auto e = euler_characteristic(geometry_of(SurfaceFamilySpec::ellipsoid(1, 1, 2)));
  CHECK(e.chi == 2);
  CHECK(e.gap <= 1e-8);
  auto x = geometry_of(SurfaceFamilySpec::round_sphere(1.0), 16, 32);
  x.gauss_K[5] = NAN;
  CHECK_THROWS_AS(euler_characteristic(x), AmbiguousTopology);
}
