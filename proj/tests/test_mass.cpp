#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hflow/errors.hpp"
#include "hflow/flow.hpp"
#include "hflow/mass.hpp"

using namespace hflow;

namespace {

constexpr double kPi = std::numbers::pi;

ExtrinsicData geometry(const SurfaceFamilySpec& spec, const Spacetime& model, int nt = 24) {
  return extrinsic_geometry(build_surface(spec, model, nt, 2 * nt), model);
}

SurfaceFamilySpec bumpy(double r) { return SurfaceFamilySpec::radial_graph(r, {{2, 1, 0.05}, {3, -2, 0.03}, {1, 1, 0.02}}); }

SurfaceFamilySpec tilted(double r) {
  return SurfaceFamilySpec::time_perturbed(bumpy(r), {{2, 0, 0.04}, {1, -1, 0.03}});
}

ScalarField zeros(const ExtrinsicData& x) { return ScalarField(x.size(), 0.0); }

ScalarField prescribed(const ExtrinsicData& x, std::vector<HarmonicCoeff> c) {
  return resolve_beta(BetaStrategy::prescribed(std::move(c)), x);
}

double max_abs_diff(const OneFormField& a, const OneFormField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.theta.size(); ++k)
    m = std::max({m, std::abs(a.theta[k] - b.theta[k]), std::abs(a.phi[k] - b.phi[k])});
  return m;
}

}  // namespace

TEST_CASE("round spheres in flat space have zero mass") {
  const Spacetime mk = Spacetime::minkowski();
  for (double r : {0.5, 1.0, 7.0}) {
    const MassReport m = hawking_mass(geometry(SurfaceFamilySpec::round_sphere(r), mk));
    CHECK(std::abs(m.m_H) < 1e-10);
    CHECK(m.area == doctest::Approx(4 * kPi * r * r).epsilon(1e-12));
    CHECK(m.willmore == doctest::Approx(16 * kPi).epsilon(1e-12));
  }
}

TEST_CASE("centered Schwarzschild sphere carries the mass parameter") {
  const Spacetime s = Spacetime::schwarzschild(1.0);
  CHECK(hawking_mass(geometry(SurfaceFamilySpec::round_sphere(3.0), s, 32)).m_H == doctest::Approx(1.0).epsilon(1e-8));
  const Spacetime s2 = Spacetime::schwarzschild(0.25);
  CHECK(hawking_mass(geometry(SurfaceFamilySpec::round_sphere(2.0), s2)).m_H == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("ellipsoid in a flat slice has negative mass") {
  const MassReport m = hawking_mass(geometry(SurfaceFamilySpec::ellipsoid(1, 1, 1.3), Spacetime::minkowski(), 32));
  CHECK(m.m_H < 0.0);
}

TEST_CASE("a timelike wiggle can make the mass positive") {
  const Spacetime mk = Spacetime::minkowski();
  double witness = -1.0;
  for (int i = 1; i <= 10 && witness < 0.0; ++i) {
    const double eps = 0.05 * i;
    const auto spec = SurfaceFamilySpec::time_perturbed(SurfaceFamilySpec::round_sphere(1.0), {{2, 0, eps}});
    try {
      if (hawking_mass(geometry(spec, mk, 32)).m_H > 0.0) witness = eps;
    } catch (const NotAdmissible&) {
    }
  }
  MESSAGE("positive mass at eps = " << witness);
  CHECK(witness > 0.0);
}

TEST_CASE("variation lines vanish on a flat round sphere") {
  const auto x = geometry(SurfaceFamilySpec::round_sphere(2.0), Spacetime::minkowski());
  const VariationReport v = variation_main(x, zeros(x), Spacetime::minkowski());
  CHECK(v.chi == 2);
  for (double line : {v.line1, v.line2, v.line3, v.line4, v.line5}) CHECK(std::abs(line) < 1e-9);
  CHECK(v.total == v.line1 + v.line2 + v.line3 + v.line4 + v.line5);
  CHECK(v.normalization == doctest::Approx(std::sqrt(x.area / std::pow(16 * kPi, 3))));
  CHECK(v.integrands.traceless.size() == x.size());
  CHECK(std::abs(variation_plane(x, Spacetime::minkowski()).total) < 1e-9);
}

TEST_CASE("mass rate vanishes along centered Schwarzschild spheres") {
  const Spacetime s = Spacetime::schwarzschild(1.0);
  const auto x = geometry(SurfaceFamilySpec::round_sphere(3.0), s);
  CHECK(std::abs(variation_main(x, zeros(x), s).total) < 1e-8);
}

TEST_CASE("variation formula matches a central difference of the flow") {
  struct Case {
    Spacetime model;
    SurfaceFamilySpec spec;
    BetaStrategy beta;
  };
  const std::vector<Case> cases{
      {Spacetime::minkowski(), bumpy(1.0), BetaStrategy::zero()},
      {Spacetime::schwarzschild(1.0), bumpy(4.0), BetaStrategy::zero()},
      {Spacetime::minkowski(), tilted(1.0), BetaStrategy::prescribed({{0, 0, 0.3}, {1, 1, 0.4}})},
      {Spacetime::schwarzschild(1.0), tilted(4.0), BetaStrategy::prescribed({{1, 1, 0.5}})},
      {Spacetime::de_sitter_static(10.0), bumpy(2.0), BetaStrategy::prescribed({{0, 0, 0.2}, {2, -1, 0.3}})},
  };
  for (const auto& c : cases) {
    const FlowState st = make_state(build_surface(c.spec, c.model, 32, 64), 0.0, c.model, c.beta);
    const double formula = variation_main(*st.extr, st.beta, c.model).mass_rate();
    const double fd = fd_mass_derivative(st, c.model, c.beta, 1e-3);
    CHECK(std::abs(formula - fd) <= std::max(1e-4 * std::abs(fd), 1e-6));
  }
}

TEST_CASE("plane and cylinder parts add up to the full rate") {
  const Spacetime ds = Spacetime::de_sitter_static(8.0);
  const auto x = geometry(tilted(1.5), ds);
  const ScalarField beta = prescribed(x, {{0, 0, 0.1}, {1, 0, 0.5}});
  const VariationReport v = variation_main(x, beta, ds);
  const PlaneReport p = variation_plane(x, ds);
  const CylinderReport c = variation_cylinder(x, beta, ds);
  CHECK(std::abs(p.total + c.total - v.total) <= 1e-10 * std::max(1.0, std::abs(v.total)));
  CHECK(p.normalization == v.normalization);
  CHECK(c.divergence == doctest::Approx(v.line5).epsilon(1e-12));

  const CylinderReport none = variation_cylinder(x, zeros(x), ds);
  CHECK(none.total == 0.0);
}

TEST_CASE("null-frame form agrees with the main formula") {
  const Spacetime mk = Spacetime::minkowski();
  const auto x = geometry(tilted(1.0), mk, 32);
  const ScalarField beta = prescribed(x, {{0, 0, 0.3}, {1, 1, 0.4}});
  const BhmsReport b = bhms_report(x, beta, mk);
  const VariationReport v = variation_main(x, beta, mk);
  CHECK(b.phi_null == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(b.U_r_error <= 1e-9);
  CHECK(b.U_t_error <= 1e-9);
  CHECK(std::abs(b.total - v.total) <= 1e-8 * std::abs(v.total));
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(b.A_r[k] == doctest::Approx(-b.B_r[k]).epsilon(1e-12));
}

TEST_CASE("null-frame connection is boost invariant") {
  const Spacetime s = Spacetime::schwarzschild(0.5);
  const auto x = geometry(tilted(3.0), s, 32);
  const BhmsReport b = bhms_report(x, zeros(x), s);
  const ScalarField bump = harmonic_field(*x.basis, 2, 1);
  std::vector<Vec4> xi(x.size()), l(x.size()), k(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xi[i] = -x.H_vec[i] / x.H_sq[i];
    const double lambda = std::exp(0.4 * bump[i]);
    l[i] = lambda * b.l[i];
    k[i] = b.k[i] / lambda;
  }
  const OneFormField boosted = null_frame_connection(x, xi, l, k);
  CHECK(max_abs_diff(boosted, b.U_r) <= 1e-10);
}

TEST_CASE("traceless terms vanish on a round sphere") {
  const auto x = geometry(SurfaceFamilySpec::round_sphere(2.0), Spacetime::schwarzschild(0.3));
  const BhmsReport b = bhms_report(x, zeros(x), Spacetime::schwarzschild(0.3));
  CHECK(sup_norm(b.theta_T_r) < 1e-10);
}

TEST_CASE("null-frame form refuses non-spherical topology") {
  auto x = geometry(SurfaceFamilySpec::round_sphere(1.0), Spacetime::minkowski());
  for (double& K : x.gauss_K) K = 0.0;
  CHECK_THROWS_AS(bhms_report(x, zeros(x), Spacetime::minkowski()), TopologyMismatch);
}

TEST_CASE("five-line signs on a time flat surface in a positive energy background") {
  const Spacetime ds = Spacetime::de_sitter_static(6.0);
  const auto x = geometry(bumpy(1.5), ds);
  CHECK(l2_norm(divergence(x.alpha, x), x) < 1e-12);
  const ScalarField beta = prescribed(x, {{0, 0, 0.5}, {1, 1, 0.6}});
  REQUIRE(sup_norm(beta) <= 1.0);
  const VariationReport v = variation_main(x, beta, ds);
  CHECK(v.line1 >= -1e-8);
  CHECK(v.line2 >= -1e-8);
  CHECK(v.line3 >= -1e-8);
  CHECK(v.line4 >= -1e-8);
  CHECK(std::abs(v.line5) <= 1e-10);
}

TEST_CASE("theta profile") {
  const ThetaSpec t{{0.5, 1.0, 0.0, 2.0}};
  CHECK(t(0.5) == doctest::Approx(0.5 + 0.5 + 0.25));
  CHECK(t.derivative(0.5) == doctest::Approx(1.0 + 1.5));
  CHECK(ThetaSpec::zero()(0.3) == 0.0);
  CHECK(ThetaSpec::identity().derivative(-0.7) == 1.0);
  CHECK(ThetaSpec::identity().describe() == "1*x");
}

TEST_CASE("certificate guards") {
  const auto x = geometry(bumpy(1.0), Spacetime::minkowski());
  CHECK_THROWS_AS(monotonicity_certificate(x, zeros(x), ThetaSpec{{0.0, -1.0}}, CertificateCase::Case1_NuH),
                  ThetaNotMonotone);
  CHECK_THROWS_AS(monotonicity_certificate(x, ScalarField(x.size(), 0.995), ThetaSpec::zero(), CertificateCase::Case1_NuH),
                  BetaOutOfRange);
}

TEST_CASE("time flat certificate on a static slice") {
  const auto x = geometry(bumpy(1.0), Spacetime::schwarzschild_isotropic(0.2));
  const MonotonicityCertificate c = monotonicity_certificate(x, zeros(x), ThetaSpec::zero(), CertificateCase::Case1_NuH);
  CHECK(c.condition_residual <= 1e-12);
  CHECK(c.pass);
  CHECK(c.F_integral >= 0.0);
  CHECK(c.v_condition_min >= 0.0);
}

TEST_CASE("Poisson beta certifies the identity profile") {
  const Spacetime mk = Spacetime::minkowski();
  const auto x = geometry(tilted(1.0), mk, 32);
  ScalarField f = divergence(x.alpha, x);
  const ScalarField div_alpha = f;
  for (double& v : f) v = -v;
  const PoissonResult p = poisson_solve(f, x);
  CHECK(p.residual_inf <= 1e-8 * sup_norm(f));

  const MonotonicityCertificate c1 =
      monotonicity_certificate(x, p.solution, ThetaSpec::identity(), CertificateCase::Case1_NuH);
  CHECK(c1.condition_residual <= 1e-8);
  CHECK(c1.F_integral >= -1e-8 * c1.F_scale);
  CHECK(c1.pass);

  // without beta the same surface is not time flat
  const MonotonicityCertificate c0 = monotonicity_certificate(x, zeros(x), ThetaSpec::zero(), CertificateCase::Case1_NuH);
  CHECK(c0.condition_residual == doctest::Approx(l2_norm(div_alpha, x)).epsilon(1e-9));
  CHECK_FALSE(c0.pass);
}

TEST_CASE("mean curvature frame of xi certifies with beta = tanh u") {
  const Spacetime mk = Spacetime::minkowski();
  const auto x = geometry(tilted(1.0), mk, 32);
  const PoissonResult u = poisson_solve(divergence(x.alpha, x), x);
  ScalarField beta(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) beta[k] = std::tanh(u.solution[k]);
  const MonotonicityCertificate c = monotonicity_certificate(x, beta, ThetaSpec::zero(), CertificateCase::Case2_NuXi);
  CHECK(c.condition_residual <= 1e-8);
  CHECK(c.F_integral >= -1e-8 * c.F_scale);
  // V (V (1 - x^2) - 1) vanishes identically here
  CHECK(c.v_condition_min >= -1e-12);
  CHECK(c.pass);
}

TEST_CASE("connection of the certified frame follows the transform law") {
  const auto x = geometry(tilted(1.0), Spacetime::minkowski(), 32);
  const ScalarField beta = prescribed(x, {{1, 0, 0.4}, {2, 2, 0.2}});
  const ThetaSpec theta{{0.0, 1.0, 0.0, 0.5}};
  ScalarField angle(x.size()), composed(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    composed[k] = theta(beta[k]);
    angle[k] = -composed[k];
  }
  const RotatedFrame f = rotated_frame(x, angle);
  const OneFormField d = differential(composed, x);
  OneFormField expected = x.alpha;
  for (std::size_t k = 0; k < x.size(); ++k) {
    expected.theta[k] += d.theta[k];
    expected.phi[k] += d.phi[k];
  }
  CHECK(max_abs_diff(f.alpha, expected) <= 1e-10);
}
