#include "hflow/calculus.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "hflow/errors.hpp"

namespace hflow {
namespace {

double real_dot(const Spectrum& a, const Spectrum& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

// Removes the constant mode and the imaginary parts of m = 0 entries.
void project_admissible(const SphereBasis& b, Spectrum& c) {
  for (int l = 0; l <= b.lmax(); ++l) c[b.index(l, 0)].imag(0.0);
  c[b.index(0, 0)] = 0.0;
}

}  // namespace

void IntrinsicGeometry::finalize_metric() {
  const std::size_t n = h.size();
  h_inv.resize(n);
  rho.resize(n);
  dA.resize(n);
  area = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double det = h[k].determinant();
    if (!std::isfinite(det) || det <= 0.0 || h[k](0, 0) <= 0.0) {
      std::ostringstream msg;
      msg << "induced metric is not positive definite at node " << k << " (det = " << det << ")";
      throw DegenerateInducedMetric(msg.str());
    }
    h_inv[k] = h[k].inverse();
    const int i = static_cast<int>(k) / basis->n_phi();
    rho[k] = std::sqrt(det) / std::sin(basis->theta(i));
    dA[k] = basis->node_weight(i) * rho[k];
    area += dA[k];
  }
}

double integrate(const ScalarField& f, const IntrinsicGeometry& geo) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * geo.dA[k];
  return s;
}

double mean(const ScalarField& f, const IntrinsicGeometry& geo) { return integrate(f, geo) / geo.area; }

double l2_norm(const ScalarField& f, const IntrinsicGeometry& geo) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f[k] * f[k] * geo.dA[k];
  return std::sqrt(s);
}

double sup_norm(const ScalarField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

OneFormField differential(const ScalarField& f, const IntrinsicGeometry& geo) {
  const Spectrum s = geo.basis->analyze(f);
  OneFormField out;
  out.theta = geo.basis->synthesize(s, Deriv::Theta);
  out.phi = geo.basis->synthesize(s, Deriv::Phi);
  return out;
}

TangentVectorField raise(const OneFormField& w, const IntrinsicGeometry& geo) {
  TangentVectorField x{ScalarField(w.theta.size()), ScalarField(w.theta.size())};
  for (std::size_t k = 0; k < w.theta.size(); ++k) {
    const Eigen::Matrix2d& hi = geo.h_inv[k];
    x.theta[k] = hi(0, 0) * w.theta[k] + hi(0, 1) * w.phi[k];
    x.phi[k] = hi(1, 0) * w.theta[k] + hi(1, 1) * w.phi[k];
  }
  return x;
}

OneFormField lower(const TangentVectorField& x, const IntrinsicGeometry& geo) {
  OneFormField w{ScalarField(x.theta.size()), ScalarField(x.theta.size())};
  for (std::size_t k = 0; k < x.theta.size(); ++k) {
    const Eigen::Matrix2d& h = geo.h[k];
    w.theta[k] = h(0, 0) * x.theta[k] + h(0, 1) * x.phi[k];
    w.phi[k] = h(1, 0) * x.theta[k] + h(1, 1) * x.phi[k];
  }
  return w;
}

ScalarField dot(const OneFormField& u, const OneFormField& v, const IntrinsicGeometry& geo) {
  ScalarField out(u.theta.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const Eigen::Matrix2d& hi = geo.h_inv[k];
    out[k] = hi(0, 0) * u.theta[k] * v.theta[k] + hi(0, 1) * (u.theta[k] * v.phi[k] + u.phi[k] * v.theta[k]) +
             hi(1, 1) * u.phi[k] * v.phi[k];
  }
  return out;
}

ScalarField norm2(const OneFormField& u, const IntrinsicGeometry& geo) { return dot(u, u, geo); }

TangentVectorField gradient(const ScalarField& f, const IntrinsicGeometry& geo) {
  return raise(differential(f, geo), geo);
}

ScalarField divergence(const TangentVectorField& x, const IntrinsicGeometry& geo) {
  // div_h X = (1/rho) div_S2(rho X), with rho X carried as a Cartesian field on the unit sphere
  const SphereBasis& b = *geo.basis;
  const std::size_t n = b.size();
  std::array<ScalarField, 3> y;
  for (auto& c : y) c.resize(n);
  for (int i = 0; i < b.n_theta(); ++i) {
    const double s = std::sin(b.theta(i));
    for (int j = 0; j < b.n_phi(); ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * b.n_phi() + j;
      const Eigen::Vector3d v = geo.rho[k] * (x.theta[k] * b.e_theta(i, j) + x.phi[k] * s * b.e_phi(i, j));
      for (int c = 0; c < 3; ++c) y[c][k] = v[c];
    }
  }
  const auto spec = b.analyze({y[0].data(), y[1].data(), y[2].data()});
  const std::vector<const Spectrum*> ptr{&spec[0], &spec[1], &spec[2]};
  const auto dth = b.synthesize(ptr, Deriv::Theta);
  const auto dph = b.synthesize(ptr, Deriv::Phi);
  ScalarField out(n);
  for (int i = 0; i < b.n_theta(); ++i) {
    const double s = std::sin(b.theta(i));
    for (int j = 0; j < b.n_phi(); ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * b.n_phi() + j;
      const Eigen::Vector3d et = b.e_theta(i, j), ep = b.e_phi(i, j);
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += et[c] * dth[c][k] + ep[c] * dph[c][k] / s;
      out[k] = d / geo.rho[k];
    }
  }
  return out;
}

ScalarField divergence(const OneFormField& w, const IntrinsicGeometry& geo) { return divergence(raise(w, geo), geo); }

ScalarField laplacian(const ScalarField& f, const IntrinsicGeometry& geo) { return divergence(gradient(f, geo), geo); }

namespace {

struct Galerkin {
  const IntrinsicGeometry& geo;
  const SphereBasis& b;
  Eigen::VectorXd diag;

  explicit Galerkin(const IntrinsicGeometry& g) : geo(g), b(*g.basis), diag(b.spectrum_size()) {
    const double scale = g.area / (4.0 * std::numbers::pi);
    for (int m = 0; m <= b.mmax(); ++m)
      for (int l = m; l <= b.lmax(); ++l)
        diag[b.index(l, m)] = l == 0 ? 0.0 : l * (l + 1.0) * (m == 0 ? 1.0 : 2.0) * 2.0 * std::numbers::pi / scale;
  }

  // stiffness: S^T D S with D = dA h^{ab}
  Spectrum apply(const Spectrum& c) const {
    const auto ut = b.synthesize(c, Deriv::Theta);
    const auto up = b.synthesize(c, Deriv::Phi);
    ScalarField wt(ut.size()), wp(ut.size());
    for (std::size_t k = 0; k < ut.size(); ++k) {
      const Eigen::Matrix2d& hi = geo.h_inv[k];
      wt[k] = geo.dA[k] * (hi(0, 0) * ut[k] + hi(0, 1) * up[k]);
      wp[k] = geo.dA[k] * (hi(1, 0) * ut[k] + hi(1, 1) * up[k]);
    }
    Spectrum out = b.synthesize_adjoint(wt, Deriv::Theta) + b.synthesize_adjoint(wp, Deriv::Phi);
    project_admissible(b, out);
    return out;
  }

  Spectrum load(const ScalarField& f) const {
    ScalarField w(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) w[k] = -geo.dA[k] * f[k];
    Spectrum out = b.synthesize_adjoint(w, Deriv::Value);
    project_admissible(b, out);
    return out;
  }

  Spectrum precondition(const Spectrum& r) const {
    Spectrum z(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) z[i] = diag[i] > 0.0 ? r[i] / diag[i] : 0.0;
    return z;
  }

  // Preconditioned conjugate gradients; returns coefficients.
  Spectrum solve(const Spectrum& rhs, const PoissonOptions& opt, int& iterations, double& rel) const {
    Spectrum x = Spectrum::Zero(rhs.size());
    const double bnorm = std::sqrt(real_dot(rhs, rhs));
    iterations = 0;
    rel = 0.0;
    if (bnorm == 0.0) return x;
    Spectrum r = rhs;
    Spectrum z = precondition(r);
    Spectrum p = z;
    double rz = real_dot(r, z);
    for (int it = 1; it <= opt.max_iterations; ++it) {
      const Spectrum ap = apply(p);
      const double pap = real_dot(p, ap);
      if (!(pap > 0.0)) break;
      const double a = rz / pap;
      x += a * p;
      r -= a * ap;
      rel = std::sqrt(real_dot(r, r)) / bnorm;
      iterations = it;
      if (rel <= opt.rel_tol) return x;
      z = precondition(r);
      const double rz_new = real_dot(r, z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    std::ostringstream msg;
    msg << "poisson_solve: relative residual " << rel << " after " << iterations << " iterations";
    throw NoConvergence(msg.str());
  }
};

}  // namespace

PoissonResult poisson_solve(const ScalarField& f, const IntrinsicGeometry& geo, const PoissonOptions& opt) {
  const std::size_t n = geo.size();
  if (f.size() != n) throw std::invalid_argument("poisson_solve: field size mismatch");
  double total = 0.0, total_abs = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += f[k] * geo.dA[k];
    total_abs += std::abs(f[k]) * geo.dA[k];
  }
  if (!std::isfinite(total)) throw Incompatible("poisson_solve: non-finite right-hand side");
  if (std::abs(total) > opt.compat_rel * total_abs + opt.compat_abs * geo.area) {
    std::ostringstream msg;
    msg << "poisson_solve: integral of f is " << total << " against integral of |f| " << total_abs;
    throw Incompatible(msg.str());
  }
  PoissonResult res;
  res.mean_removed = total / geo.area;
  ScalarField g(f);
  for (double& v : g) v -= res.mean_removed;
  res.rhs_inf = sup_norm(g);
  res.solution.assign(n, 0.0);
  if (res.rhs_inf == 0.0) return res;

  const Galerkin gal(geo);
  Spectrum c = gal.solve(gal.load(g), opt, res.iterations, res.relative_residual);
  ScalarField beta = geo.basis->synthesize(c, Deriv::Value);

  auto defect = [&](const ScalarField& b) {
    ScalarField r = laplacian(b, geo);
    for (std::size_t k = 0; k < n; ++k) r[k] = g[k] - r[k];
    return r;
  };
  ScalarField r = defect(beta);
  double rinf = sup_norm(r);
  for (int sweep = 0; sweep < opt.defect_sweeps && rinf > 1e-12 * res.rhs_inf; ++sweep) {
    int it = 0;
    double rel = 0.0;
    const Spectrum dc = gal.solve(gal.load(r), opt, it, rel);
    const Spectrum trial = c + dc;
    const ScalarField tb = geo.basis->synthesize(trial, Deriv::Value);
    const ScalarField tr = defect(tb);
    const double tinf = sup_norm(tr);
    res.iterations += it;
    if (!(tinf < rinf)) break;
    const bool stalled = tinf > 0.9 * rinf;
    c = trial;
    beta = tb;
    r = tr;
    rinf = tinf;
    if (stalled) break;
  }
  const double shift = mean(beta, geo);
  for (double& v : beta) v -= shift;
  res.solution = std::move(beta);
  res.residual_inf = rinf;
  return res;
}

EulerCharacteristic euler_characteristic(const ScalarField& gauss_K, const IntrinsicGeometry& geo) {
  EulerCharacteristic e;
  e.raw = integrate(gauss_K, geo) / (2.0 * std::numbers::pi);
  if (!std::isfinite(e.raw)) throw AmbiguousTopology("euler_characteristic: curvature integral is not finite");
  e.chi = static_cast<int>(std::lround(e.raw));
  e.gap = std::abs(e.raw - e.chi);
  if (e.gap > 0.1) {
    std::ostringstream msg;
    msg << "euler_characteristic: integral K dA / 2pi = " << e.raw << " is not near an integer";
    throw AmbiguousTopology(msg.str());
  }
  return e;
}

ScalarField harmonic_field(const SphereBasis& basis, int l, int m) {
  ScalarField f(basis.size());
  for (int i = 0; i < basis.n_theta(); ++i)
    for (int j = 0; j < basis.n_phi(); ++j)
      f[static_cast<std::size_t>(i) * basis.n_phi() + j] = SphereBasis::real_ylm(l, m, basis.theta(i), basis.phi(j));
  return f;
}

}  // namespace hflow
