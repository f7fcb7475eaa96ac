#include "hflow/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "hflow/errors.hpp"

namespace hflow {
namespace {

// Second-order forward-mode scalar for radial profile functions.
struct Jet2 {
  double v = 0.0, d = 0.0, dd = 0.0;
};
Jet2 operator-(Jet2 a, Jet2 b) { return {a.v - b.v, a.d - b.d, a.dd - b.dd}; }
Jet2 operator*(Jet2 a, Jet2 b) { return {a.v * b.v, a.d * b.v + a.v * b.d, a.dd * b.v + 2 * a.d * b.d + a.v * b.dd}; }
Jet2 operator*(double s, Jet2 a) { return {s * a.v, s * a.d, s * a.dd}; }
Jet2 operator+(double s, Jet2 a) { return {s + a.v, a.d, a.dd}; }
Jet2 operator-(double s, Jet2 a) { return {s - a.v, -a.d, -a.dd}; }
Jet2 reciprocal(Jet2 a) {
  const double inv = 1.0 / a.v;
  return {inv, -a.d * inv * inv, (2 * a.d * a.d * inv - a.dd) * inv * inv};
}
Jet2 operator/(Jet2 a, Jet2 b) { return a * reciprocal(b); }
Jet2 constant(double c) { return {c, 0.0, 0.0}; }

// Static spherically symmetric metric in Cartesian form:
// g_00 = -F(r), g_ij = A(r) δ_ij + B(r) x_i x_j.
struct RadialProfile {
  Jet2 F, A, B;
};

RadialProfile radial_profile(SpacetimeKind kind, const Spacetime::Params& p, double r) {
  const Jet2 rj{r, 1.0, 0.0};
  switch (kind) {
    case SpacetimeKind::Minkowski:
      return {constant(1.0), constant(1.0), constant(0.0)};
    case SpacetimeKind::SchwarzschildStandard: {
      const double m = p.mass;
      const Jet2 F = 1.0 - (2.0 * m) * reciprocal(rj);
      const Jet2 B = (2.0 * m) * reciprocal(rj * rj * (rj - constant(2.0 * m)));
      return {F, constant(1.0), B};
    }
    case SpacetimeKind::SchwarzschildIsotropic: {
      const double m = p.mass;
      const Jet2 psi = 1.0 + (0.5 * m) * reciprocal(rj);
      const Jet2 chi = 1.0 - (0.5 * m) * reciprocal(rj);
      const Jet2 q = chi / psi;
      const Jet2 psi2 = psi * psi;
      return {q * q, psi2 * psi2, constant(0.0)};
    }
    case SpacetimeKind::DeSitterStatic: {
      const double L2 = p.hubble_length * p.hubble_length;
      const Jet2 F = 1.0 - (1.0 / L2) * (rj * rj);
      const Jet2 B = reciprocal(constant(L2) - rj * rj);
      return {F, constant(1.0), B};
    }
    case SpacetimeKind::NumericTable:
      break;
  }
  return {constant(1.0), constant(1.0), constant(0.0)};
}

double fd_step_for(double step, double coord) { return step * (1.0 + std::abs(coord)); }

}  // namespace

std::string to_string(SpacetimeKind kind) {
  switch (kind) {
    case SpacetimeKind::Minkowski: return "minkowski";
    case SpacetimeKind::SchwarzschildStandard: return "schwarzschild";
    case SpacetimeKind::SchwarzschildIsotropic: return "schwarzschild_isotropic";
    case SpacetimeKind::DeSitterStatic: return "de_sitter_static";
    case SpacetimeKind::NumericTable: return "numeric_table";
  }
  return "unknown";
}

double Riemann::sectional_numerator(const Vec4& x, const Vec4& y) const {
  double s = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) s += (*this)(a, b, c, d) * x[a] * y[b] * x[c] * y[d];
  return s;
}

// ---------------------------------------------------------------- factories

Spacetime Spacetime::minkowski() { return Spacetime(SpacetimeKind::Minkowski, Params{}); }

Spacetime Spacetime::schwarzschild(double mass, double margin) {
  if (!(mass >= 0.0) || !(margin >= 0.0)) throw ConfigError("schwarzschild: mass and margin must be >= 0");
  Params p;
  p.mass = mass;
  p.margin = margin;
  return Spacetime(SpacetimeKind::SchwarzschildStandard, p);
}

Spacetime Spacetime::schwarzschild_isotropic(double mass, double margin) {
  if (!(mass >= 0.0) || !(margin >= 0.0)) throw ConfigError("schwarzschild_isotropic: mass and margin must be >= 0");
  Params p;
  p.mass = mass;
  p.margin = margin;
  return Spacetime(SpacetimeKind::SchwarzschildIsotropic, p);
}

Spacetime Spacetime::de_sitter_static(double hubble_length, double margin) {
  if (!(hubble_length > 0.0) || !(margin >= 0.0 && margin < 1.0))
    throw ConfigError("de_sitter_static: need L > 0 and margin in [0,1)");
  Params p;
  p.hubble_length = hubble_length;
  p.margin = margin;
  return Spacetime(SpacetimeKind::DeSitterStatic, p);
}

Spacetime Spacetime::numeric_table(std::shared_ptr<const MetricTable> table, double fd_step) {
  if (!table) throw ConfigError("numeric_table: no table given");
  Params p;
  p.fd_step = fd_step;
  return Spacetime(SpacetimeKind::NumericTable, p, std::move(table));
}

// ------------------------------------------------------------------- domain

bool Spacetime::in_domain(const Event& p) const {
  if (!p.coords.allFinite()) return false;
  const double r = p.spatial_radius();
  switch (kind_) {
    case SpacetimeKind::Minkowski: return true;
    case SpacetimeKind::SchwarzschildStandard: return r > 2.0 * params_.mass * (1.0 + params_.margin) && r > 0.0;
    case SpacetimeKind::SchwarzschildIsotropic: return r > 0.5 * params_.mass * (1.0 + params_.margin) && r > 0.0;
    case SpacetimeKind::DeSitterStatic: return r <= params_.hubble_length * (1.0 - params_.margin);
    case SpacetimeKind::NumericTable: return table_->contains(p.coords);
  }
  return false;
}

void Spacetime::require_domain(const Event& p) const {
  if (in_domain(p)) return;
  std::ostringstream msg;
  msg << to_string(kind_) << ": event (" << p.coords[0] << ", " << p.coords[1] << ", " << p.coords[2] << ", "
      << p.coords[3] << ") with r = " << p.spatial_radius() << " is outside the chart";
  throw OutOfChart(msg.str());
}

// ------------------------------------------------------------------- metric

MetricJet Spacetime::analytic_jet(const Event& p, int order) const {
  MetricJet jet;
  if (kind_ == SpacetimeKind::NumericTable) return table_->jet(p.coords);
  if (kind_ == SpacetimeKind::Minkowski) {
    jet.g = Vec4(-1, 1, 1, 1).asDiagonal();
    return jet;
  }
  Eigen::Vector3d x = p.coords.tail<3>();
  double r = x.norm();
  if (r < 1e-12) {
    // only reachable for de Sitter, whose profile is smooth at the origin
    x = Eigen::Vector3d(1e-12, 0, 0);
    r = 1e-12;
  }
  const Eigen::Vector3d n = x / r;
  const RadialProfile prof = radial_profile(kind_, params_, r);

  jet.g.setZero();
  jet.g(0, 0) = -prof.F.v;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) jet.g(i + 1, j + 1) = (i == j ? prof.A.v : 0.0) + prof.B.v * x[i] * x[j];
  if (order < 1) return jet;

  auto kd = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  // ∂_k Q = Q' n_k; ∂_k ∂_l Q = Q'' n_k n_l + Q' (δ_kl - n_k n_l)/r
  auto d1 = [&](const Jet2& q, int k) { return q.d * n[k]; };
  auto d2 = [&](const Jet2& q, int k, int l) { return q.dd * n[k] * n[l] + q.d * (kd(k, l) - n[k] * n[l]) / r; };

  for (int k = 0; k < 3; ++k) {
    Mat4& dg = jet.dg[k + 1];
    dg.setZero();
    dg(0, 0) = -d1(prof.F, k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        dg(i + 1, j + 1) = d1(prof.A, k) * kd(i, j) + d1(prof.B, k) * x[i] * x[j] +
                           prof.B.v * (kd(k, i) * x[j] + x[i] * kd(k, j));
  }
  jet.dg[0].setZero();
  if (order < 2) return jet;

  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) jet.ddg[a][b].setZero();
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      Mat4& h = jet.ddg[k + 1][l + 1];
      h(0, 0) = -d2(prof.F, k, l);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          h(i + 1, j + 1) = d2(prof.A, k, l) * kd(i, j) + d2(prof.B, k, l) * x[i] * x[j] +
                            d1(prof.B, k) * (kd(l, i) * x[j] + x[i] * kd(l, j)) +
                            d1(prof.B, l) * (kd(k, i) * x[j] + x[i] * kd(k, j)) +
                            prof.B.v * (kd(k, i) * kd(l, j) + kd(l, i) * kd(k, j));
    }
  return jet;
}

Mat4 Spacetime::metric_at(const Event& p) const {
  require_domain(p);
  if (kind_ == SpacetimeKind::NumericTable) return table_->metric(p.coords);
  return analytic_jet(p, 0).g;
}

MetricJet Spacetime::jet_at(const Event& p) const {
  require_domain(p);
  return analytic_jet(p, 2);
}

Christoffel Spacetime::christoffel_at(const Event& p) const {
  require_domain(p);
  return christoffel_from_jet(analytic_jet(p, 1));
}

Christoffel Spacetime::christoffel_fd(const Event& p) const {
  require_domain(p);
  // unchecked evaluation: stencils may straddle the margin
  auto metric = [this](const Vec4& x) {
    if (kind_ == SpacetimeKind::NumericTable) return table_->metric(x);
    return analytic_jet(Event(x), 0).g;
  };
  MetricJet jet;
  jet.g = metric(p.coords);
  for (int k = 0; k < 4; ++k) {
    const double h = fd_step_for(params_.fd_step, p.coords[k]);
    Vec4 e = Vec4::Zero();
    e[k] = h;
    jet.dg[k] = (-metric(p.coords + 2 * e) + 8 * metric(p.coords + e) - 8 * metric(p.coords - e) +
                 metric(p.coords - 2 * e)) /
                (12 * h);
  }
  return christoffel_from_jet(jet);
}

Riemann Spacetime::riemann_at(const Event& p) const { return riemann_from_jet(jet_at(p)); }

CurvatureBundle Spacetime::einstein_at(const Event& p) const {
  require_domain(p);
  CurvatureBundle out;
  switch (kind_) {
    case SpacetimeKind::Minkowski:
    case SpacetimeKind::SchwarzschildStandard:
    case SpacetimeKind::SchwarzschildIsotropic:
      return out;
    case SpacetimeKind::DeSitterStatic: {
      // maximally symmetric: Ric = (3/L²) g, R = 12/L²
      const double L2 = params_.hubble_length * params_.hubble_length;
      const Mat4 g = metric_at(p);
      out.ricci = (3.0 / L2) * g;
      out.scalar = 12.0 / L2;
      out.einstein = out.ricci - 0.5 * out.scalar * g;
      return out;
    }
    case SpacetimeKind::NumericTable: {
      const MetricJet jet = table_->jet(p.coords);
      return curvature_from_riemann(riemann_from_jet(jet), jet.g);
    }
  }
  return out;
}

CurvatureBundle Spacetime::einstein_fd(const Event& p) const {
  require_domain(p);
  auto gamma_at = [this](const Vec4& x) {
    // same stencil as christoffel_fd without the domain check
    auto metric = [this](const Vec4& y) {
      if (kind_ == SpacetimeKind::NumericTable) return table_->metric(y);
      return analytic_jet(Event(y), 0).g;
    };
    MetricJet jet;
    jet.g = metric(x);
    for (int k = 0; k < 4; ++k) {
      const double h = fd_step_for(params_.fd_step, x[k]);
      Vec4 e = Vec4::Zero();
      e[k] = h;
      jet.dg[k] = (-metric(x + 2 * e) + 8 * metric(x + e) - 8 * metric(x - e) + metric(x - 2 * e)) / (12 * h);
    }
    return christoffel_from_jet(jet);
  };

  const Christoffel gamma = gamma_at(p.coords);
  std::array<Christoffel, 4> dgamma{};  // dgamma[e][a](b,c) = ∂_e Γ^a_bc
  for (int e = 0; e < 4; ++e) {
    const double h = fd_step_for(params_.fd_step, p.coords[e]);
    Vec4 de = Vec4::Zero();
    de[e] = h;
    const Christoffel gp2 = gamma_at(p.coords + 2 * de), gp1 = gamma_at(p.coords + de);
    const Christoffel gm1 = gamma_at(p.coords - de), gm2 = gamma_at(p.coords - 2 * de);
    for (int a = 0; a < 4; ++a) dgamma[e][a] = (-gp2[a] + 8 * gp1[a] - 8 * gm1[a] + gm2[a]) / (12 * h);
  }

  const Mat4 g = kind_ == SpacetimeKind::NumericTable ? table_->metric(p.coords) : analytic_jet(p, 0).g;
  Riemann riem;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double up = dgamma[c][a](d, b) - dgamma[d][a](c, b);
          for (int e = 0; e < 4; ++e) up += gamma[a](c, e) * gamma[e](d, b) - gamma[a](d, e) * gamma[e](c, b);
          riem(a, b, c, d) = up;  // still R^a_bcd here
        }
  Riemann lowered;
  for (int f = 0; f < 4; ++f)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double s = 0.0;
          for (int a = 0; a < 4; ++a) s += g(f, a) * riem(a, b, c, d);
          lowered(f, b, c, d) = s;
        }
  return curvature_from_riemann(lowered, g);
}

double Spacetime::inner(const Event& p, const Vec4& u, const Vec4& v) const { return u.dot(metric_at(p) * v); }

// --------------------------------------------------------- jet contractions

Christoffel christoffel_from_jet(const MetricJet& jet) {
  const Mat4 ginv = jet.g.inverse();
  Christoffel lower{};  // lower[d](b,c) = Γ_dbc
  for (int d = 0; d < 4; ++d)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) lower[d](b, c) = 0.5 * (jet.dg[b](d, c) + jet.dg[c](d, b) - jet.dg[d](b, c));
  Christoffel out{};
  for (int a = 0; a < 4; ++a) {
    out[a].setZero();
    for (int d = 0; d < 4; ++d) out[a] += ginv(a, d) * lower[d];
  }
  return out;
}

Riemann riemann_from_jet(const MetricJet& jet) {
  const Mat4 ginv = jet.g.inverse();
  Christoffel lower{};
  for (int d = 0; d < 4; ++d)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) lower[d](b, c) = 0.5 * (jet.dg[b](d, c) + jet.dg[c](d, b) - jet.dg[d](b, c));
  Christoffel gamma{};
  for (int a = 0; a < 4; ++a) {
    gamma[a].setZero();
    for (int d = 0; d < 4; ++d) gamma[a] += ginv(a, d) * lower[d];
  }
  // ∂_e Γ^a_bc = ∂_e g^{ad} Γ_dbc + g^{ad} ∂_e Γ_dbc
  std::array<Christoffel, 4> dgamma{};
  for (int e = 0; e < 4; ++e) {
    const Mat4 dginv = -ginv * jet.dg[e] * ginv;
    Christoffel dlower{};
    for (int d = 0; d < 4; ++d)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          dlower[d](b, c) = 0.5 * (jet.ddg[e][b](d, c) + jet.ddg[e][c](d, b) - jet.ddg[e][d](b, c));
    for (int a = 0; a < 4; ++a) {
      dgamma[e][a].setZero();
      for (int d = 0; d < 4; ++d) dgamma[e][a] += dginv(a, d) * lower[d] + ginv(a, d) * dlower[d];
    }
  }
  Riemann up;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double s = dgamma[c][a](d, b) - dgamma[d][a](c, b);
          for (int e = 0; e < 4; ++e) s += gamma[a](c, e) * gamma[e](d, b) - gamma[a](d, e) * gamma[e](c, b);
          up(a, b, c, d) = s;
        }
  Riemann out;
  for (int f = 0; f < 4; ++f)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double s = 0.0;
          for (int a = 0; a < 4; ++a) s += jet.g(f, a) * up(a, b, c, d);
          out(f, b, c, d) = s;
        }
  return out;
}

CurvatureBundle curvature_from_riemann(const Riemann& riemann, const Mat4& g) {
  const Mat4 ginv = g.inverse();
  CurvatureBundle out;
  // R_bd = g^{ac} R_abcd
  for (int b = 0; b < 4; ++b)
    for (int d = 0; d < 4; ++d) {
      double s = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) s += ginv(a, c) * riemann(a, b, c, d);
      out.ricci(b, d) = s;
    }
  out.ricci = 0.5 * (out.ricci + out.ricci.transpose()).eval();
  out.scalar = (ginv.cwiseProduct(out.ricci)).sum();
  out.einstein = out.ricci - 0.5 * out.scalar * g;
  return out;
}

bool has_lorentzian_signature(const Mat4& g) {
  Eigen::SelfAdjointEigenSolver<Mat4> solver(0.5 * (g + g.transpose()));
  const Vec4 ev = solver.eigenvalues();  // ascending
  return ev[0] < 0.0 && ev[1] > 0.0 && ev[2] > 0.0 && ev[3] > 0.0;
}

// ---------------------------------------------------------------------- DEC

namespace {

// Orthonormal tetrad (columns) with e0 future timelike along -∇t.
Eigen::Matrix4d tetrad(const Mat4& g) {
  const Mat4 ginv = g.inverse();
  Eigen::Matrix4d e;
  Vec4 u = -ginv.col(0);
  if (u[0] < 0) u = -u;
  e.col(0) = u / std::sqrt(-u.dot(g * u));
  for (int k = 1; k < 4; ++k) {
    Vec4 v = Vec4::Unit(k);
    v += v.dot(g * e.col(0)) * e.col(0);
    for (int j = 1; j < k; ++j) v -= v.dot(g * e.col(j)) * e.col(j);
    e.col(k) = v / std::sqrt(v.dot(g * v));
  }
  return e;
}

}  // namespace

DecReport dec_sample_check(const Spacetime& model, const Event& p, int trials, std::uint64_t seed,
                           double tolerance) {
  const Mat4 g = model.metric_at(p);
  const Mat4 G = model.einstein_at(p).einstein;
  const Eigen::Matrix4d e = tetrad(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto future_causal = [&](int i) {
    Eigen::Vector3d dir(normal(rng), normal(rng), normal(rng));
    dir.normalize();
    const double speed = (i % 4 == 0) ? 1.0 : unit(rng);
    Vec4 local(1.0, speed * dir[0], speed * dir[1], speed * dir[2]);
    return Vec4(e * local);
  };

  DecReport report;
  report.trials = trials;
  report.seed = seed;
  report.tolerance = tolerance;
  report.min_value = std::numeric_limits<double>::infinity();
  for (int i = 0; i < trials; ++i) {
    const Vec4 u = future_causal(i);
    const Vec4 v = future_causal(i + 1);
    const double val = u.dot(G * v);
    if (val < report.min_value) {
      report.min_value = val;
      report.argmin_u = u;
      report.argmin_v = v;
    }
  }
  if (trials <= 0) report.min_value = 0.0;
  report.pass = report.min_value >= -tolerance;
  return report;
}

// -------------------------------------------------------------- MetricTable

MetricTable::MetricTable(std::array<std::vector<double>, 4> axes, std::vector<std::array<double, kComponents>> values)
    : axes_(std::move(axes)), g_(std::move(values)) {
  std::size_t expected = 1;
  for (const auto& axis : axes_) {
    if (axis.empty()) throw ConfigError("metric table: empty axis");
    for (std::size_t i = 1; i < axis.size(); ++i)
      if (!(axis[i] > axis[i - 1])) throw ConfigError("metric table: axis values must increase");
    if (axis.size() > 2) {
      const double step = axis[1] - axis[0];
      for (std::size_t i = 2; i < axis.size(); ++i)
        if (std::abs((axis[i] - axis[i - 1]) - step) > 1e-9 * (1.0 + std::abs(step)))
          throw ConfigError("metric table: lattice must be regular");
    }
    expected *= axis.size();
  }
  if (g_.size() != expected) throw ConfigError("metric table: row count does not match a full lattice");
  build_derivatives();
}

std::size_t MetricTable::index(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const {
  return ((i0 * axes_[1].size() + i1) * axes_[2].size() + i2) * axes_[3].size() + i3;
}

namespace {

using Row = std::array<double, MetricTable::kComponents>;

// Lattice derivative along `axis`: central inside, second-order one-sided at
// the ends, zero for a single sample.
std::vector<Row> lattice_derivative(const std::vector<Row>& f, const std::array<std::vector<double>, 4>& axes,
                                    int axis) {
  std::array<std::size_t, 4> n{axes[0].size(), axes[1].size(), axes[2].size(), axes[3].size()};
  std::array<std::size_t, 4> stride{n[1] * n[2] * n[3], n[2] * n[3], n[3], 1};
  std::vector<Row> out(f.size(), Row{});
  const std::size_t na = n[axis];
  if (na < 2) return out;
  const double h = axes[axis][1] - axes[axis][0];
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const std::size_t i = (idx / stride[axis]) % na;
    const std::size_t s = stride[axis];
    Row& o = out[idx];
    for (int c = 0; c < MetricTable::kComponents; ++c) {
      if (na == 2) {
        o[c] = (f[idx - i * s + s][c] - f[idx - i * s][c]) / h;
      } else if (i == 0) {
        o[c] = (-3 * f[idx][c] + 4 * f[idx + s][c] - f[idx + 2 * s][c]) / (2 * h);
      } else if (i == na - 1) {
        o[c] = (3 * f[idx][c] - 4 * f[idx - s][c] + f[idx - 2 * s][c]) / (2 * h);
      } else {
        o[c] = (f[idx + s][c] - f[idx - s][c]) / (2 * h);
      }
    }
  }
  return out;
}

Mat4 unpack(const Row& row) {
  Mat4 g;
  int c = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      g(i, j) = row[c];
      g(j, i) = row[c];
      ++c;
    }
  return g;
}

}  // namespace

void MetricTable::build_derivatives() {
  for (int k = 0; k < 4; ++k) dg_[k] = lattice_derivative(g_, axes_, k);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) ddg_[k][l] = lattice_derivative(dg_[l], axes_, k);
}

bool MetricTable::contains(const Vec4& x) const {
  for (int k = 0; k < 4; ++k) {
    if (!std::isfinite(x[k])) return false;
    if (axes_[k].size() == 1) continue;  // constant along a single-sample axis
    if (x[k] < axes_[k].front() || x[k] > axes_[k].back()) return false;
  }
  return true;
}

template <class Fn>
void MetricTable::interpolate(const Vec4& x, Fn&& accumulate) const {
  std::array<std::size_t, 4> lo{};
  std::array<double, 4> frac{};
  for (int k = 0; k < 4; ++k) {
    const auto& axis = axes_[k];
    if (axis.size() == 1) {
      lo[k] = 0;
      frac[k] = 0.0;
      continue;
    }
    const double xc = std::clamp(x[k], axis.front(), axis.back());
    const double h = axis[1] - axis[0];
    std::size_t i = static_cast<std::size_t>(std::floor((xc - axis.front()) / h));
    i = std::min(i, axis.size() - 2);
    lo[k] = i;
    frac[k] = (xc - axis[i]) / h;
  }
  for (int corner = 0; corner < 16; ++corner) {
    double w = 1.0;
    std::array<std::size_t, 4> id{};
    for (int k = 0; k < 4; ++k) {
      const int bit = (corner >> k) & 1;
      if (bit && axes_[k].size() == 1) {
        w = 0.0;
        break;
      }
      id[k] = lo[k] + bit;
      w *= bit ? frac[k] : 1.0 - frac[k];
    }
    if (w == 0.0) continue;
    accumulate(index(id[0], id[1], id[2], id[3]), w);
  }
}

Mat4 MetricTable::metric(const Vec4& x) const {
  Row acc{};
  interpolate(x, [&](std::size_t idx, double w) {
    for (int c = 0; c < kComponents; ++c) acc[c] += w * g_[idx][c];
  });
  return unpack(acc);
}

MetricJet MetricTable::jet(const Vec4& x) const {
  Row g{};
  std::array<Row, 4> d{};
  std::array<std::array<Row, 4>, 4> dd{};
  interpolate(x, [&](std::size_t idx, double w) {
    for (int c = 0; c < kComponents; ++c) {
      g[c] += w * g_[idx][c];
      for (int k = 0; k < 4; ++k) {
        d[k][c] += w * dg_[k][idx][c];
        for (int l = 0; l < 4; ++l) dd[k][l][c] += w * ddg_[k][l][idx][c];
      }
    }
  });
  MetricJet jet;
  jet.g = unpack(g);
  for (int k = 0; k < 4; ++k) {
    jet.dg[k] = unpack(d[k]);
    for (int l = 0; l < 4; ++l) jet.ddg[k][l] = 0.5 * (unpack(dd[k][l]) + unpack(dd[l][k]));
  }
  return jet;
}

MetricTable MetricTable::from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("metric table: empty input");
  const std::string expected = "t,x1,x2,x3,g00,g01,g02,g03,g11,g12,g13,g22,g23,g33";
  std::string header;
  for (char ch : line)
    if (!std::isspace(static_cast<unsigned char>(ch))) header.push_back(ch);
  if (header != expected) throw ConfigError("metric table: header must be `" + expected + "`");

  std::vector<std::array<double, 14>> rows;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::array<double, 14> row{};
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= 14) throw ConfigError("metric table: too many columns");
      try {
        row[c++] = std::stod(cell);
      } catch (const std::exception&) {
        throw ConfigError("metric table: unreadable value `" + cell + "`");
      }
    }
    if (c != 14) throw ConfigError("metric table: expected 14 columns");
    rows.push_back(row);
  }
  std::array<std::vector<double>, 4> axes;
  for (int k = 0; k < 4; ++k) {
    for (const auto& r : rows) axes[k].push_back(r[k]);
    std::sort(axes[k].begin(), axes[k].end());
    axes[k].erase(std::unique(axes[k].begin(), axes[k].end(),
                              [](double a, double b) { return std::abs(a - b) <= 1e-12 * (1 + std::abs(a)); }),
                  axes[k].end());
  }
  std::vector<Row> values(axes[0].size() * axes[1].size() * axes[2].size() * axes[3].size(), Row{});
  std::vector<char> seen(values.size(), 0);
  auto locate = [&](int k, double v) {
    const auto& a = axes[k];
    auto it = std::lower_bound(a.begin(), a.end(), v - 1e-12 * (1 + std::abs(v)));
    return static_cast<std::size_t>(it - a.begin());
  };
  for (const auto& r : rows) {
    const std::size_t i0 = locate(0, r[0]), i1 = locate(1, r[1]), i2 = locate(2, r[2]), i3 = locate(3, r[3]);
    const std::size_t idx = ((i0 * axes[1].size() + i1) * axes[2].size() + i2) * axes[3].size() + i3;
    if (idx >= values.size()) throw ConfigError("metric table: malformed lattice");
    for (int c = 0; c < kComponents; ++c) values[idx][c] = r[4 + c];
    seen[idx] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end() || rows.size() != values.size())
    throw ConfigError("metric table: rows do not form a complete lattice");
  return MetricTable(std::move(axes), std::move(values));
}

MetricTable MetricTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("metric table: cannot open " + path);
  return from_csv(in);
}

void MetricTable::write_csv(std::ostream& out) const {
  out << "t,x1,x2,x3,g00,g01,g02,g03,g11,g12,g13,g22,g23,g33\n";
  out.precision(17);
  for (std::size_t i0 = 0; i0 < axes_[0].size(); ++i0)
    for (std::size_t i1 = 0; i1 < axes_[1].size(); ++i1)
      for (std::size_t i2 = 0; i2 < axes_[2].size(); ++i2)
        for (std::size_t i3 = 0; i3 < axes_[3].size(); ++i3) {
          out << axes_[0][i0] << ',' << axes_[1][i1] << ',' << axes_[2][i2] << ',' << axes_[3][i3];
          for (double v : g_[index(i0, i1, i2, i3)]) out << ',' << v;
          out << '\n';
        }
}

}  // namespace hflow
