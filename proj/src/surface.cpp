#include "hflow/surface.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "hflow/errors.hpp"
#include "hflow/parallel.hpp"

namespace hflow {
namespace {

double dot4(const Mat4& g, const Vec4& u, const Vec4& v) { return u.dot(g * v); }

Vec4 gamma_contract(const Christoffel& gamma, const Vec4& u, const Vec4& v) {
  Vec4 out;
  for (int mu = 0; mu < 4; ++mu) out[mu] = u.dot(gamma[mu] * v);
  return out;
}

void direction_angles(const Eigen::Vector3d& v, double& theta, double& phi) {
  theta = std::acos(std::clamp(v[2] / v.norm(), -1.0, 1.0));
  phi = std::atan2(v[1], v[0]);
}

struct FieldDerivs {
  std::vector<std::vector<double>> d_theta, d_phi;
};

// Theta/phi derivatives of the four chart components of a node vector field.
FieldDerivs vector_derivatives(const SphereBasis& b, const std::vector<Vec4>& v) {
  const std::size_t n = v.size();
  std::array<std::vector<double>, 4> comp;
  for (int mu = 0; mu < 4; ++mu) {
    comp[mu].resize(n);
    for (std::size_t k = 0; k < n; ++k) comp[mu][k] = v[k][mu];
  }
  const auto spec = b.analyze({comp[0].data(), comp[1].data(), comp[2].data(), comp[3].data()});
  const std::vector<const Spectrum*> ptr{&spec[0], &spec[1], &spec[2], &spec[3]};
  return {b.synthesize(ptr, Deriv::Theta), b.synthesize(ptr, Deriv::Phi)};
}

}  // namespace

double evaluate_harmonics(const std::vector<HarmonicCoeff>& coeffs, double theta, double phi) {
  double s = 0.0;
  for (const auto& c : coeffs) s += c.value * SphereBasis::real_ylm(c.l, c.m, theta, phi);
  return s;
}

// ----------------------------------------------------------------- families

SurfaceFamilySpec SurfaceFamilySpec::round_sphere(double r) {
  SurfaceFamilySpec s;
  s.family = Family::RoundSphere;
  s.radius = r;
  return s;
}

SurfaceFamilySpec SurfaceFamilySpec::ellipsoid(double a, double b, double c) {
  SurfaceFamilySpec s;
  s.family = Family::Ellipsoid;
  s.semi_axes = {a, b, c};
  return s;
}

SurfaceFamilySpec SurfaceFamilySpec::radial_graph(double r, std::vector<HarmonicCoeff> coeffs) {
  SurfaceFamilySpec s;
  s.family = Family::RadialGraph;
  s.radius = r;
  s.radial = std::move(coeffs);
  return s;
}

SurfaceFamilySpec SurfaceFamilySpec::time_perturbed(SurfaceFamilySpec base, std::vector<HarmonicCoeff> eps) {
  base.time_offsets = std::move(eps);
  return base;
}

std::string SurfaceFamilySpec::family_name() const {
  std::string name;
  switch (family) {
    case Family::RoundSphere: name = "round_sphere"; break;
    case Family::Ellipsoid: name = "ellipsoid"; break;
    case Family::RadialGraph: name = "radial_graph"; break;
  }
  return is_time_perturbed() ? "time_perturbed(" + name + ")" : name;
}

Vec4 SurfaceFamilySpec::embed(double theta, double phi) const {
  const Eigen::Vector3d u(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
  const Eigen::Vector3d v = rotation * u;
  double th = theta, ph = phi;
  if (!rotation.isIdentity(0.0) && (family == Family::RadialGraph || is_time_perturbed())) direction_angles(v, th, ph);
  Eigen::Vector3d x;
  switch (family) {
    case Family::RoundSphere: x = radius * v; break;
    case Family::Ellipsoid: x = semi_axes.cwiseProduct(v); break;
    case Family::RadialGraph: x = (radius + evaluate_harmonics(radial, th, ph)) * v; break;
  }
  x += center;
  const double t = t0 + evaluate_harmonics(time_offsets, th, ph);
  return {t, x[0], x[1], x[2]};
}

void SurfaceGrid::write_csv(std::ostream& out) const {
  out << "i,j,theta,phi,t,x1,x2,x3\n";
  const auto prec = out.precision(17);
  for (int i = 0; i < n_theta(); ++i)
    for (int j = 0; j < n_phi(); ++j) {
      const Vec4& e = events[static_cast<std::size_t>(i) * n_phi() + j];
      out << i << ',' << j << ',' << basis->theta(i) << ',' << basis->phi(j) << ',' << e[0] << ',' << e[1] << ','
          << e[2] << ',' << e[3] << '\n';
    }
  out.precision(prec);
}

SurfaceGrid build_surface(const SurfaceFamilySpec& spec, const Spacetime& model, int n_theta, int n_phi) {
  if (n_theta < 16 || n_phi < 16) throw ConfigError("build_surface: grid sizes must be at least 16");
  switch (spec.family) {
    case SurfaceFamilySpec::Family::RoundSphere:
    case SurfaceFamilySpec::Family::RadialGraph:
      if (!(spec.radius > 0.0)) throw DegenerateSpec("build_surface: radius must be positive");
      break;
    case SurfaceFamilySpec::Family::Ellipsoid:
      if (!(spec.semi_axes.minCoeff() > 0.0)) throw DegenerateSpec("build_surface: semi-axes must be positive");
      break;
  }
  for (const auto& c : spec.radial)
    if (c.l < 0 || std::abs(c.m) > c.l) throw DegenerateSpec("build_surface: invalid harmonic index");
  for (const auto& c : spec.time_offsets)
    if (c.l < 0 || std::abs(c.m) > c.l) throw DegenerateSpec("build_surface: invalid harmonic index");
  if (std::abs(spec.rotation.determinant() - 1.0) > 1e-12 ||
      !(spec.rotation.transpose() * spec.rotation).isIdentity(1e-12))
    throw DegenerateSpec("build_surface: parametrization rotation must be a proper rotation");

  SurfaceGrid grid;
  grid.basis = SphereBasis::get(n_theta, n_phi);
  grid.chart = to_string(model.kind());
  grid.events.resize(grid.basis->size());
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      const double th = grid.basis->theta(i), ph = grid.basis->phi(j);
      if (spec.family == SurfaceFamilySpec::Family::RadialGraph) {
        const Eigen::Vector3d v =
            spec.rotation * Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        double vt = th, vp = ph;
        direction_angles(v, vt, vp);
        if (!(spec.radius + evaluate_harmonics(spec.radial, vt, vp) > 0.0))
          throw DegenerateSpec("build_surface: radial profile is not positive");
      }
      const Vec4 e = spec.embed(th, ph);
      model.require_domain(Event(e));
      grid.events[static_cast<std::size_t>(i) * n_phi + j] = e;
    }
  return grid;
}

// ---------------------------------------------------------------- geometry

static double default_eps_adm(const IntrinsicGeometry& geo, const ScalarField& h_sq) {
  // the round value 16 pi / area keeps the threshold meaningful on near-minimal surfaces
  return 1e-6 * std::max(mean(h_sq, geo), 16.0 * std::numbers::pi / geo.area);
}

double default_eps_adm(const ExtrinsicData& extr) { return default_eps_adm(extr, extr.H_sq); }

OneFormField normal_connection(const ExtrinsicData& extr, const std::vector<Vec4>& n, const std::vector<Vec4>& m) {
  const FieldDerivs d = vector_derivatives(*extr.basis, n);
  OneFormField out{ScalarField(n.size()), ScalarField(n.size())};
  for (std::size_t k = 0; k < n.size(); ++k) {
    Vec4 dt, dp;
    for (int mu = 0; mu < 4; ++mu) {
      dt[mu] = d.d_theta[mu][k];
      dp[mu] = d.d_phi[mu][k];
    }
    dt += gamma_contract(extr.christoffel[k], extr.e_theta[k], n[k]);
    dp += gamma_contract(extr.christoffel[k], extr.e_phi[k], n[k]);
    out.theta[k] = dot4(extr.metric[k], dt, m[k]);
    out.phi[k] = dot4(extr.metric[k], dp, m[k]);
  }
  return out;
}

ExtrinsicData extrinsic_geometry(const SurfaceGrid& grid, const Spacetime& model, const GeometryOptions& opt) {
  const SphereBasis& b = *grid.basis;
  const std::size_t n = grid.size();
  for (const auto& e : grid.events) model.require_domain(Event(e));

  ExtrinsicData x;
  x.basis = grid.basis;
  x.events = grid.events;

  std::array<std::vector<double>, 4> comp;
  for (int mu = 0; mu < 4; ++mu) {
    comp[mu].resize(n);
    for (std::size_t k = 0; k < n; ++k) comp[mu][k] = grid.events[k][mu];
  }
  const auto spec = b.analyze({comp[0].data(), comp[1].data(), comp[2].data(), comp[3].data()});
  const std::vector<const Spectrum*> ptr{&spec[0], &spec[1], &spec[2], &spec[3]};
  const auto ft = b.synthesize(ptr, Deriv::Theta);
  const auto fp = b.synthesize(ptr, Deriv::Phi);
  const auto ftt = b.synthesize(ptr, Deriv::ThetaTheta);
  const auto ftp = b.synthesize(ptr, Deriv::ThetaPhi);
  const auto fpp = b.synthesize(ptr, Deriv::PhiPhi);

  x.e_theta.resize(n);
  x.e_phi.resize(n);
  x.metric.resize(n);
  x.christoffel.resize(n);
  x.h.resize(n);
  std::vector<std::array<Vec4, 3>> accel(n);  // F_ab + Gamma(e_a, e_b) for ab = tt, tp, pp
  parallel_for(n, [&](std::size_t k) {
    Vec4 et, ep, att, atp, app;
    for (int mu = 0; mu < 4; ++mu) {
      et[mu] = ft[mu][k];
      ep[mu] = fp[mu][k];
      att[mu] = ftt[mu][k];
      atp[mu] = ftp[mu][k];
      app[mu] = fpp[mu][k];
    }
    const Event ev(grid.events[k]);
    const Mat4 g = model.metric_at(ev);
    const Christoffel gamma = model.christoffel_at(ev);
    x.e_theta[k] = et;
    x.e_phi[k] = ep;
    x.metric[k] = g;
    x.christoffel[k] = gamma;
    x.h[k] << dot4(g, et, et), dot4(g, et, ep), dot4(g, ep, et), dot4(g, ep, ep);
    accel[k] = {att + gamma_contract(gamma, et, et), atp + gamma_contract(gamma, et, ep),
                app + gamma_contract(gamma, ep, ep)};
  });
  x.finalize_metric();

  x.H_vec.resize(n);
  x.H_sq.resize(n);
  x.H.resize(n);
  x.frame.nu.resize(n);
  x.frame.nu_perp.resize(n);
  x.II_r.resize(n);
  x.II_t.resize(n);
  x.ring_II_r.resize(n);
  x.ring_II_t.resize(n);
  std::vector<std::array<Vec4, 3>> II(n);
  parallel_for(n, [&](std::size_t k) {
    const Mat4& g = x.metric[k];
    const Eigen::Matrix2d& hi = x.h_inv[k];
    const std::array<Vec4, 2> e{x.e_theta[k], x.e_phi[k]};
    auto remove_tangential = [&](Vec4 v) {
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::Vector2d c(dot4(g, v, e[0]), dot4(g, v, e[1]));
        const Eigen::Vector2d up = hi * c;
        v -= up[0] * e[0] + up[1] * e[1];
      }
      return v;
    };
    // future timelike normal from the gradient of the time coordinate
    Vec4 nt = remove_tangential(-g.inverse().col(0));
    nt /= std::sqrt(-dot4(g, nt, nt));
    Vec4 nr = Vec4::Zero();
    double best = -1.0;
    for (int c = 1; c < 4; ++c) {
      Vec4 v = remove_tangential(Vec4::Unit(c));
      v += dot4(g, v, nt) * nt;
      const double q = dot4(g, v, v);
      if (q > best) {
        best = q;
        nr = v;
      }
    }
    nr = remove_tangential(nr);
    nr += dot4(g, nr, nt) * nt;
    nr /= std::sqrt(dot4(g, nr, nr));

    auto normal_part = [&](const Vec4& a) { return Vec4(dot4(g, a, nr) * nr - dot4(g, a, nt) * nt); };
    for (int ab = 0; ab < 3; ++ab) II[k][ab] = normal_part(accel[k][ab]);
    const Vec4 H = hi(0, 0) * II[k][0] + 2.0 * hi(0, 1) * II[k][1] + hi(1, 1) * II[k][2];
    double hr = dot4(g, H, nr);
    if (hr > 0.0) {
      nr = -nr;
      hr = -hr;
    }
    const double ht = -dot4(g, H, nt);
    const double hsq = dot4(g, H, H);
    x.H_vec[k] = H;
    x.H_sq[k] = hsq;
    if (hsq > 0.0) {
      const double habs = std::sqrt(hsq);
      const double a = -hr / habs, bb = -ht / habs;
      x.H[k] = habs;
      x.frame.nu[k] = a * nr + bb * nt;
      x.frame.nu_perp[k] = bb * nr + a * nt;
    } else {
      x.H[k] = 0.0;
      x.frame.nu[k] = nr;
      x.frame.nu_perp[k] = nt;
    }
    const Vec4& nu = x.frame.nu[k];
    const Vec4& nup = x.frame.nu_perp[k];
    Eigen::Matrix2d r, t;
    r << -dot4(g, II[k][0], nu), -dot4(g, II[k][1], nu), -dot4(g, II[k][1], nu), -dot4(g, II[k][2], nu);
    t << -dot4(g, II[k][0], nup), -dot4(g, II[k][1], nup), -dot4(g, II[k][1], nup), -dot4(g, II[k][2], nup);
    x.II_r[k] = r;
    x.II_t[k] = t;
    x.ring_II_r[k] = r - 0.5 * (hi.cwiseProduct(r)).sum() * x.h[k];
    x.ring_II_t[k] = t - 0.5 * (hi.cwiseProduct(t)).sum() * x.h[k];
  });

  x.eps_adm = opt.eps_adm >= 0.0 ? opt.eps_adm : default_eps_adm(x);
  if (opt.check_admissible) {
    const AdmissibilityReport adm = admissibility_check(x, x.eps_adm);
    if (!adm.pass) {
      std::ostringstream msg;
      msg << "surface is not admissible: min <H,H> = " << adm.min_H_sq << " at (theta, phi) = (" << adm.theta << ", "
          << adm.phi << "), threshold " << adm.eps_adm;
      throw NotAdmissible(msg.str());
    }
  }

  if (opt.connection) x.alpha = normal_connection(x, x.frame.nu, x.frame.nu_perp);

  if (opt.gauss_curvature) {
    x.gauss_K.resize(n);
    const bool flat = model.kind() == SpacetimeKind::Minkowski;
    parallel_for(n, [&](std::size_t k) {
      const Mat4& g = x.metric[k];
      double ambient = 0.0;
      if (!flat) ambient = model.riemann_at(Event(x.events[k])).sectional_numerator(x.e_theta[k], x.e_phi[k]);
      const double gauss = dot4(g, II[k][0], II[k][2]) - dot4(g, II[k][1], II[k][1]);
      x.gauss_K[k] = (ambient + gauss) / x.h[k].determinant();
    });
  }

  if (opt.trace_residuals) {
    std::array<ScalarField, 4> lap;
    for (int mu = 0; mu < 4; ++mu) lap[mu] = laplacian(comp[mu], x);
    x.trace_residual_r.resize(n);
    x.trace_residual_t.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Eigen::Matrix2d& hi = x.h_inv[k];
      const Christoffel& gamma = x.christoffel[k];
      Vec4 tension(lap[0][k], lap[1][k], lap[2][k], lap[3][k]);
      tension += hi(0, 0) * gamma_contract(gamma, x.e_theta[k], x.e_theta[k]) +
                 2.0 * hi(0, 1) * gamma_contract(gamma, x.e_theta[k], x.e_phi[k]) +
                 hi(1, 1) * gamma_contract(gamma, x.e_phi[k], x.e_phi[k]);
      x.trace_residual_r[k] = x.H[k] + dot4(x.metric[k], tension, x.frame.nu[k]);
      x.trace_residual_t[k] = -dot4(x.metric[k], tension, x.frame.nu_perp[k]);
    }
  }
  return x;
}

Vec4 perp_rotate(const ExtrinsicData& extr, std::size_t node, const Vec4& v, double tol) {
  const Mat4& g = extr.metric[node];
  const Eigen::Vector2d c(dot4(g, v, extr.e_theta[node]), dot4(g, v, extr.e_phi[node]));
  const double tangential = std::sqrt(std::max(0.0, c.dot(extr.h_inv[node] * c)));
  if (tangential > tol * (1.0 + v.norm())) {
    std::ostringstream msg;
    msg << "perp_rotate: vector has tangential part " << tangential << " at node " << node;
    throw NotNormal(msg.str());
  }
  const Vec4& nu = extr.frame.nu[node];
  const Vec4& nup = extr.frame.nu_perp[node];
  const double a = dot4(g, v, nu);
  const double b = -dot4(g, v, nup);
  return b * nu + a * nup;
}

RotatedFrame rotated_frame(const ExtrinsicData& extr, const ScalarField& angle) {
  const std::size_t n = extr.size();
  RotatedFrame out;
  out.frame.nu.resize(n);
  out.frame.nu_perp.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double c = std::cosh(angle[k]), s = std::sinh(angle[k]);
    out.frame.nu[k] = c * extr.frame.nu[k] + s * extr.frame.nu_perp[k];
    out.frame.nu_perp[k] = s * extr.frame.nu[k] + c * extr.frame.nu_perp[k];
  }
  out.alpha = normal_connection(extr, out.frame.nu, out.frame.nu_perp);
  return out;
}

AdmissibilityReport admissibility_check(const ExtrinsicData& extr, double eps_adm) {
  AdmissibilityReport r;
  r.eps_adm = eps_adm >= 0.0 ? eps_adm : default_eps_adm(extr);
  r.min_H_sq = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < extr.H_sq.size(); ++k) {
    const double v = extr.H_sq[k];
    if (!(v >= r.min_H_sq)) {
      r.min_H_sq = v;
      r.argmin = k;
      if (std::isnan(v)) break;
    }
  }
  const int i = static_cast<int>(r.argmin) / extr.basis->n_phi();
  const int j = static_cast<int>(r.argmin) % extr.basis->n_phi();
  r.theta = extr.basis->theta(i);
  r.phi = extr.basis->phi(j);
  r.pass = std::isfinite(r.min_H_sq) && r.min_H_sq > r.eps_adm;
  return r;
}

EulerCharacteristic euler_characteristic(const ExtrinsicData& extr) {
  if (extr.gauss_K.size() != extr.size()) throw AmbiguousTopology("euler_characteristic: Gauss curvature not computed");
  return euler_characteristic(extr.gauss_K, extr);
}

double mesh_quality(const ExtrinsicData& extr) {
  const SphereBasis& b = *extr.basis;
  double q = 1.0;
  for (std::size_t k = 0; k < extr.size(); ++k) {
    const double s = std::sin(b.theta(static_cast<int>(k) / b.n_phi()));
    Eigen::Matrix2d m = extr.h[k];
    m(0, 1) /= s;
    m(1, 0) /= s;
    m(1, 1) /= s * s;
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
    q = std::min(q, ev[0] / ev[1]);
  }
  return q;
}

}  // namespace hflow
