#include "hflow/mass.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "hflow/errors.hpp"
#include "hflow/parallel.hpp"

namespace hflow {
namespace {

constexpr double kPi = std::numbers::pi;

double dot4(const Mat4& g, const Vec4& u, const Vec4& v) { return u.dot(g * v); }

// tr(h^-1 a h^-1 b)
double contract(const Eigen::Matrix2d& hi, const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  return (hi * a * hi * b).trace();
}

std::vector<Vec4> inverse_mean_curvature(const ExtrinsicData& extr) {
  std::vector<Vec4> I(extr.size());
  for (std::size_t k = 0; k < I.size(); ++k) I[k] = -extr.H_vec[k] / extr.H_sq[k];
  return I;
}

std::vector<Vec4> perp_field(const ExtrinsicData& extr, const std::vector<Vec4>& v) {
  std::vector<Vec4> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = perp_rotate(extr, k, v[k]);
  return out;
}

OneFormField log_gradient(const ExtrinsicData& extr) {
  OneFormField d = differential(extr.H, extr);
  for (std::size_t k = 0; k < extr.size(); ++k) {
    d.theta[k] /= extr.H[k];
    d.phi[k] /= extr.H[k];
  }
  return d;
}

void require_size(const ScalarField& beta, const ExtrinsicData& extr) {
  if (beta.size() != extr.size()) throw ConfigError("beta field does not match the surface grid");
}

}  // namespace

MassReport hawking_mass(const ExtrinsicData& extr) {
  MassReport r;
  r.area = extr.area;
  r.willmore = integrate(extr.H_sq, extr);
  r.m_H = std::sqrt(r.area / (16.0 * kPi)) * (1.0 - r.willmore / (16.0 * kPi));
  return r;
}

double mass_rate_normalization(double area) { return std::sqrt(area / std::pow(16.0 * kPi, 3)); }

ScalarField einstein_density(const ExtrinsicData& extr, const Spacetime& model, const std::vector<Vec4>& v) {
  ScalarField out(extr.size(), 0.0);
  if (model.kind() == SpacetimeKind::Minkowski) return out;
  parallel_for(extr.size(), [&](std::size_t k) {
    const Mat4 G = model.einstein_at(Event(extr.events[k])).einstein;
    const Vec4 minus_h_perp = -perp_rotate(extr, k, extr.H_vec[k]);
    const Vec4 v_perp = perp_rotate(extr, k, v[k]);
    out[k] = 2.0 * minus_h_perp.dot(G * v_perp);
  });
  return out;
}

VariationReport variation_main(const ExtrinsicData& extr, const ScalarField& beta, const Spacetime& model) {
  require_size(beta, extr);
  const std::size_t n = extr.size();
  VariationReport r;
  r.chi = euler_characteristic(extr).chi;
  r.normalization = mass_rate_normalization(extr.area);

  const std::vector<Vec4> I = inverse_mean_curvature(extr);
  const std::vector<Vec4> I_perp = perp_field(extr, I);
  std::vector<Vec4> xi(n);
  for (std::size_t k = 0; k < n; ++k) xi[k] = I[k] + beta[k] * I_perp[k];

  const OneFormField dlog = log_gradient(extr);
  const ScalarField a2 = norm2(extr.alpha, extr);
  const ScalarField g2 = norm2(dlog, extr);
  const ScalarField ag = dot(extr.alpha, dlog, extr);
  const ScalarField div_a = divergence(extr.alpha, extr);

  VariationIntegrands& f = r.integrands;
  f.einstein = einstein_density(extr, model, xi);
  f.traceless.resize(n);
  f.gradient.resize(n);
  f.divergence.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Matrix2d& hi = extr.h_inv[k];
    const Eigen::Matrix2d& R = extr.ring_II_r[k];
    const Eigen::Matrix2d& T = extr.ring_II_t[k];
    f.traceless[k] = contract(hi, R, R) + 2.0 * beta[k] * contract(hi, R, T) + contract(hi, T, T);
    f.gradient[k] = 2.0 * (g2[k] + 2.0 * beta[k] * ag[k] + a2[k]);
    f.divergence[k] = 2.0 * beta[k] * div_a[k];
  }
  r.line1 = 4.0 * kPi * (2.0 - r.chi);
  r.line2 = integrate(f.einstein, extr);
  r.line3 = integrate(f.traceless, extr);
  r.line4 = integrate(f.gradient, extr);
  r.line5 = integrate(f.divergence, extr);
  r.total = r.line1 + r.line2 + r.line3 + r.line4 + r.line5;
  return r;
}

PlaneReport variation_plane(const ExtrinsicData& extr, const Spacetime& model) {
  const std::size_t n = extr.size();
  PlaneReport r;
  r.normalization = mass_rate_normalization(extr.area);
  r.line1 = 4.0 * kPi * (2.0 - euler_characteristic(extr).chi);
  r.einstein = integrate(einstein_density(extr, model, inverse_mean_curvature(extr)), extr);
  const OneFormField dlog = log_gradient(extr);
  const ScalarField a2 = norm2(extr.alpha, extr);
  const ScalarField g2 = norm2(dlog, extr);
  ScalarField tl(n), gr(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Eigen::Matrix2d& hi = extr.h_inv[k];
    tl[k] = contract(hi, extr.ring_II_r[k], extr.ring_II_r[k]) + contract(hi, extr.ring_II_t[k], extr.ring_II_t[k]);
    gr[k] = 2.0 * (g2[k] + a2[k]);
  }
  r.traceless = integrate(tl, extr);
  r.gradient = integrate(gr, extr);
  r.total = r.line1 + r.einstein + r.traceless + r.gradient;
  return r;
}

CylinderReport variation_cylinder(const ExtrinsicData& extr, const ScalarField& beta, const Spacetime& model) {
  require_size(beta, extr);
  const std::size_t n = extr.size();
  CylinderReport r;
  r.normalization = mass_rate_normalization(extr.area);
  // xi_t = beta I_perp, so xi_t_perp = beta I
  std::vector<Vec4> xi_t = perp_field(extr, inverse_mean_curvature(extr));
  for (std::size_t k = 0; k < n; ++k) xi_t[k] *= beta[k];
  r.einstein = integrate(einstein_density(extr, model, xi_t), extr);
  const OneFormField dlog = log_gradient(extr);
  const ScalarField ag = dot(extr.alpha, dlog, extr);
  const ScalarField div_a = divergence(extr.alpha, extr);
  ScalarField tl(n), gr(n), dv(n);
  for (std::size_t k = 0; k < n; ++k) {
    tl[k] = 2.0 * beta[k] * contract(extr.h_inv[k], extr.ring_II_r[k], extr.ring_II_t[k]);
    gr[k] = 4.0 * beta[k] * ag[k];
    dv[k] = 2.0 * beta[k] * div_a[k];
  }
  r.traceless = integrate(tl, extr);
  r.gradient = integrate(gr, extr);
  r.divergence = integrate(dv, extr);
  r.total = r.einstein + r.traceless + r.gradient + r.divergence;
  return r;
}

// ---------------------------------------------------------------- null frame

OneFormField null_frame_connection(const ExtrinsicData& extr, const std::vector<Vec4>& xi, const std::vector<Vec4>& l,
                                   const std::vector<Vec4>& k, double cutoff) {
  const std::size_t n = extr.size();
  ScalarField A(n), B(n), phi(n);
  std::vector<Vec4> Al(n), Bk(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Mat4& g = extr.metric[i];
    phi[i] = -dot4(g, l[i], k[i]);
    A[i] = -dot4(g, xi[i], k[i]) / phi[i];
    B[i] = -dot4(g, xi[i], l[i]) / phi[i];
    Al[i] = A[i] * l[i];
    Bk[i] = B[i] * k[i];
  }
  const OneFormField lb = normal_connection(extr, Bk, l);
  const OneFormField ka = normal_connection(extr, Al, k);
  OneFormField U{ScalarField(n, 0.0), ScalarField(n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(A[i]) <= cutoff || std::abs(B[i]) <= cutoff) continue;
    const double c = 0.5 / phi[i];
    U.theta[i] = c * (lb.theta[i] / B[i] - ka.theta[i] / A[i]);
    U.phi[i] = c * (lb.phi[i] / B[i] - ka.phi[i] / A[i]);
  }
  return U;
}

BhmsReport bhms_report(const ExtrinsicData& extr, const ScalarField& beta, const Spacetime& model,
                       const BhmsOptions& opt) {
  require_size(beta, extr);
  const EulerCharacteristic chi = euler_characteristic(extr);
  if (chi.chi != 2) {
    std::ostringstream msg;
    msg << "null-frame mass variation needs a topological sphere, got chi = " << chi.chi;
    throw TopologyMismatch(msg.str());
  }
  const std::size_t n = extr.size();
  BhmsReport r;
  r.l.resize(n);
  r.k.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.l[i] = extr.frame.nu[i] + extr.frame.nu_perp[i];
    r.k[i] = -extr.frame.nu[i] + extr.frame.nu_perp[i];
  }
  r.phi_null = -dot4(extr.metric[0], r.l[0], r.k[0]);

  const std::vector<Vec4> xi_r = inverse_mean_curvature(extr);
  std::vector<Vec4> xi_t = perp_field(extr, xi_r);
  for (std::size_t i = 0; i < n; ++i) xi_t[i] *= beta[i];

  r.A_r.resize(n);
  r.B_r.resize(n);
  r.A_t.resize(n);
  r.B_t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Mat4& g = extr.metric[i];
    const double phi = -dot4(g, r.l[i], r.k[i]);
    r.A_r[i] = -dot4(g, xi_r[i], r.k[i]) / phi;
    r.B_r[i] = -dot4(g, xi_r[i], r.l[i]) / phi;
    r.A_t[i] = -dot4(g, xi_t[i], r.k[i]) / phi;
    r.B_t[i] = -dot4(g, xi_t[i], r.l[i]) / phi;
  }

  const double beta_sup = sup_norm(beta);
  const double cut = opt.u_cutoff * beta_sup;
  r.U_r = null_frame_connection(extr, xi_r, r.l, r.k);
  r.U_t = null_frame_connection(extr, xi_t, r.l, r.k);
  r.U_t_valid.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    r.U_r_error = std::max({r.U_r_error, std::abs(r.U_r.theta[i] + extr.alpha.theta[i]),
                            std::abs(r.U_r.phi[i] + extr.alpha.phi[i])});
    if (beta_sup > 0.0 && std::abs(beta[i]) > cut) {
      r.U_t_valid[i] = 1;
      r.U_t_error = std::max({r.U_t_error, std::abs(r.U_t.theta[i] + extr.alpha.theta[i]),
                              std::abs(r.U_t.phi[i] + extr.alpha.phi[i])});
    }
  }

  // radial psi from |xi_r|
  r.psi.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.psi[i] = 0.5 * std::log(dot4(extr.metric[i], xi_r[i], xi_r[i]));
  const OneFormField dpsi = differential(r.psi, extr);
  const ScalarField u2 = norm2(r.U_r, extr);
  const ScalarField p2 = norm2(dpsi, extr);
  const ScalarField up = dot(r.U_r, dpsi, extr);

  const OneFormField dlog = log_gradient(extr);
  const ScalarField ag = dot(extr.alpha, dlog, extr);
  const ScalarField ab = dot(extr.alpha, differential(beta, extr), extr);
  const ScalarField div_a = divergence(extr.alpha, extr);

  r.theta_T_r.resize(n);
  r.theta_T_t.resize(n);
  r.theta_L_r.resize(n);
  r.theta_L_t.resize(n);
  r.u_density.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Mat4& g = extr.metric[i];
    const Eigen::Matrix2d& hi = extr.h_inv[i];
    const Vec4& H = extr.H_vec[i];
    const Vec4 minus_h_perp = -perp_rotate(extr, i, H);
    // trace-free second fundamental form as normal vectors
    std::array<Vec4, 4> II;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        II[2 * a + b] = -extr.ring_II_r[i](a, b) * extr.frame.nu[i] + extr.ring_II_t[i](a, b) * extr.frame.nu_perp[i];
    auto contract_with = [&](const Vec4& x, const Vec4& y) {
      double s = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d)
              s += hi(a, c) * hi(b, d) * dot4(g, II[2 * a + b], x) * dot4(g, II[2 * c + d], y);
      return s;
    };
    double q = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) q += hi(a, c) * hi(b, d) * dot4(g, II[2 * a + b], II[2 * c + d]);
    auto theta_T = [&](const Vec4& xi) { return 2.0 * (-contract_with(H, xi) + 0.5 * q * dot4(g, xi, H)); };
    r.theta_T_r[i] = theta_T(xi_r[i]);
    r.theta_T_t[i] = theta_T(xi_t[i]);

    r.theta_L_r[i] = 2.0 * ((u2[i] + p2[i]) * -dot4(g, xi_r[i], H) - 2.0 * up[i] * dot4(g, xi_r[i], minus_h_perp));
    r.theta_L_t[i] = 4.0 * beta[i] * ag[i] - 4.0 * ab[i];
    // U of the timelike part, regular extension -alpha
    r.u_density[i] = -2.0 * (-div_a[i]) * dot4(g, xi_t[i], minus_h_perp);
  }

  const ScalarField g_r = einstein_density(extr, model, xi_r);
  const ScalarField g_t = einstein_density(extr, model, xi_t);
  const double gr = integrate(g_r, extr), gt = integrate(g_t, extr);
  r.g_term = gr + gt;
  const double tr = integrate(r.theta_T_r, extr), tt = integrate(r.theta_T_t, extr);
  const double lr = integrate(r.theta_L_r, extr), lt = integrate(r.theta_L_t, extr);
  r.theta_T = tr + tt;
  r.theta_L = lr + lt;
  r.u_term = integrate(r.u_density, extr);
  r.radial = gr + tr + lr;
  r.timelike = gt + tt + lt + r.u_term;
  r.total = r.radial + r.timelike;
  return r;
}

// ---------------------------------------------------------------- certificate

double ThetaSpec::operator()(double x) const {
  double s = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) s = s * x + *it;
  return s;
}

double ThetaSpec::derivative(double x) const {
  double s = 0.0;
  for (std::size_t n = coeffs.size(); n-- > 1;) s = s * x + static_cast<double>(n) * coeffs[n];
  return s;
}

std::string ThetaSpec::describe() const {
  if (coeffs.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    if (coeffs[n] == 0.0) continue;
    if (!first) out << " + ";
    out << coeffs[n];
    if (n >= 1) out << "*x";
    if (n >= 2) out << "^" << n;
    first = false;
  }
  return first ? "0" : out.str();
}

std::string to_string(CertificateCase c) { return c == CertificateCase::Case1_NuH ? "Case1_NuH" : "Case2_NuXi"; }

MonotonicityCertificate monotonicity_certificate(const ExtrinsicData& extr, const ScalarField& beta,
                                                 const ThetaSpec& theta, CertificateCase kase,
                                                 const CertificateOptions& opt) {
  require_size(beta, extr);
  const double bsup = sup_norm(beta);
  if (!(bsup <= 1.0 - opt.delta)) {
    std::ostringstream msg;
    msg << "sup|beta| = " << bsup << " exceeds 1 - delta = " << 1.0 - opt.delta;
    throw BetaOutOfRange(msg.str());
  }

  MonotonicityCertificate c;
  c.kase = kase;
  c.theta = theta;
  c.tol = opt.tol;
  c.v_condition_min = std::numeric_limits<double>::infinity();
  const int ns = std::max(opt.samples, 3);
  for (int i = 0; i < ns; ++i) {
    const double x = -1.0 + 2.0 * (i + 0.5) / ns;
    const double dtheta = theta.derivative(x);
    if (dtheta < -1e-12) {
      std::ostringstream msg;
      msg << "Theta = " << theta.describe() << " decreases at x = " << x << " (Theta' = " << dtheta << ")";
      throw ThetaNotMonotone(msg.str());
    }
    const double v = kase == CertificateCase::Case1_NuH ? -dtheta : dtheta + 1.0 / (1.0 - x * x);
    c.v_condition_min = std::min(c.v_condition_min, v * (v * (1.0 - x * x) - 1.0));
  }

  const std::size_t n = extr.size();
  ScalarField angle(n);
  for (std::size_t k = 0; k < n; ++k)
    angle[k] = kase == CertificateCase::Case1_NuH ? -theta(beta[k]) : std::atanh(beta[k]) + theta(beta[k]);
  const RotatedFrame frame = rotated_frame(extr, angle);
  c.condition_residual = l2_norm(divergence(frame.alpha, extr), extr);

  const OneFormField dlog = log_gradient(extr);
  const ScalarField a2 = norm2(extr.alpha, extr);
  const ScalarField g2 = norm2(dlog, extr);
  const ScalarField ag = dot(extr.alpha, dlog, extr);
  const ScalarField div_a = divergence(extr.alpha, extr);
  c.F.resize(n);
  ScalarField positive(n);
  for (std::size_t k = 0; k < n; ++k) {
    c.F[k] = a2[k] + g2[k] + 2.0 * beta[k] * ag[k] + beta[k] * div_a[k];
    positive[k] = std::max(c.F[k], 0.0);
  }
  c.F_integral = integrate(c.F, extr);
  c.F_scale = integrate(positive, extr);
  c.pass = c.condition_residual <= opt.tol && c.F_integral >= -opt.tol * c.F_scale;
  return c;
}

}  // namespace hflow
