#include "hflow/verify.hpp"

#include <array>
#include <chrono>
#include <limits>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "hflow/errors.hpp"
#include "hflow/report.hpp"

namespace hflow {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct Context {
  const RunConfig& config;
  Spacetime model;
  std::shared_ptr<const ExtrinsicData> extr;
  ScalarField beta;

  std::mt19937_64 rng(std::uint64_t salt) const { return std::mt19937_64(config.seed ^ (salt * 0x9E3779B97F4A7C15ull)); }

  ExtrinsicData geometry(int nt, const GeometryOptions& opt = {}) const {
    return extrinsic_geometry(build_surface(config.surface, model, nt, 2 * nt), model, opt);
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

double max_abs_diff(const OneFormField& a, const OneFormField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.theta.size(); ++k)
    m = std::max({m, std::abs(a.theta[k] - b.theta[k]), std::abs(a.phi[k] - b.phi[k])});
  return m;
}

// smooth test field: a few low harmonics with seeded coefficients
ScalarField random_field(const SphereBasis& b, std::mt19937_64& rng, int lmax = 4) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField f(b.size(), 0.0);
  for (int l = 0; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const double c = u(rng) / (1.0 + l);
      const ScalarField y = harmonic_field(b, l, m);
      for (std::size_t k = 0; k < f.size(); ++k) f[k] += c * y[k];
    }
  return f;
}

// beta fields exercising the timelike part: the configured one and a fixed profile
std::vector<std::pair<std::string, ScalarField>> beta_cases(const Context& c) {
  std::vector<std::pair<std::string, ScalarField>> out{{c.config.beta.name(), c.beta}};
  out.emplace_back("profile", resolve_beta(BetaStrategy::prescribed({{0, 0, 0.3}, {1, 1, 0.5}}), *c.extr));
  return out;
}

CheckResult frame_orthonormality(const Context& c) {
  const ExtrinsicData& x = *c.extr;
  double err = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Mat4& g = x.metric[k];
    const Vec4& n = x.frame.nu[k];
    const Vec4& t = x.frame.nu_perp[k];
    const double et = std::sqrt(x.e_theta[k].dot(g * x.e_theta[k]));
    const double ep = std::sqrt(x.e_phi[k].dot(g * x.e_phi[k]));
    err = std::max({err, std::abs(n.dot(g * n) - 1.0), std::abs(t.dot(g * t) + 1.0), std::abs(n.dot(g * t)),
                    std::abs(n.dot(g * x.e_theta[k])) / et, std::abs(n.dot(g * x.e_phi[k])) / ep,
                    std::abs(t.dot(g * x.e_theta[k])) / et, std::abs(t.dot(g * x.e_phi[k])) / ep});
  }
  return {"frame_orthonormality", err <= c.config.tol.frame, err, c.config.tol.frame, "", 0.0};
}

CheckResult perp_involution(const Context& c) {
  const ExtrinsicData& x = *c.extr;
  auto rng = c.rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double err = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Mat4& g = x.metric[k];
    const double a = u(rng), b = u(rng);
    const Vec4 v = a * x.frame.nu[k] + b * x.frame.nu_perp[k];
    const Vec4 pv = perp_rotate(x, k, v);
    const double scale = a * a + b * b;
    err = std::max({err, (perp_rotate(x, k, pv) - v).norm() / (1.0 + v.norm()),
                    std::abs(pv.dot(g * pv) + v.dot(g * v)) / scale, std::abs(pv.dot(g * v)) / scale});
  }
  return {"perp_involution", err <= c.config.tol.perp, err, c.config.tol.perp, "", 0.0};
}

CheckResult trace_identities(const Context& c) {
  GeometryOptions opt;
  opt.trace_residuals = true;
  const int n0 = std::max(16, c.config.n_theta / 2);
  std::vector<double> err;
  double algebraic = 0.0;
  std::ostringstream detail;
  for (int n : {n0, 3 * n0 / 2, 2 * n0}) {
    const ExtrinsicData x = c.geometry(n, opt);
    err.push_back(std::max(sup_norm(x.trace_residual_r), sup_norm(x.trace_residual_t)));
    for (std::size_t k = 0; k < x.size(); ++k)
      algebraic = std::max({algebraic, std::abs(x.h_inv[k].cwiseProduct(x.II_r[k]).sum() - x.H[k]) / x.H[k],
                            std::abs(x.h_inv[k].cwiseProduct(x.II_t[k]).sum()) / x.H[k]});
    detail << "n=" << n << ": " << fmt(err.back()) << "; ";
  }
  // spectral scheme: above roundoff each refinement must keep improving. Second
  // derivatives amplify roundoff like n^2.
  bool converging = true;
  const std::array<int, 3> ns{n0, 3 * n0 / 2, 2 * n0};
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double floor = 100.0 * std::numeric_limits<double>::epsilon() * ns[k] * ns[k];
    if (err[k] > floor && err[k] >= err[k - 1]) converging = false;
  }
  detail << "algebraic " << fmt(algebraic);
  const double e = std::max(err.back(), algebraic);
  return {"trace_identities", converging && e <= c.config.tol.trace, e, c.config.tol.trace, detail.str(), 0.0};
}

CheckResult divergence_theorem(const Context& c) {
  const ExtrinsicData& x = *c.extr;
  auto rng = c.rng(4);
  auto relative = [&](const ScalarField& div) {
    double num = integrate(div, x), den = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) den += std::abs(div[k]) * x.dA[k];
    return den > 0.0 ? std::abs(num) / den : std::abs(num);
  };
  const double e_alpha = relative(divergence(x.alpha, x));
  const double e_grad = relative(divergence(gradient(random_field(*x.basis, rng), x), x));
  const double e = std::max(e_alpha, e_grad);
  return {"divergence_theorem", e <= c.config.tol.divergence, e, c.config.tol.divergence,
          "alpha " + fmt(e_alpha) + ", gradient " + fmt(e_grad), 0.0};
}

CheckResult poisson_eigen(const Context& c) {
  const Spacetime flat = Spacetime::minkowski();
  const int nt = c.config.n_theta;
  const ExtrinsicData unit = extrinsic_geometry(build_surface(SurfaceFamilySpec::round_sphere(1.0), flat, nt, 2 * nt), flat);
  const ScalarField y20 = harmonic_field(*unit.basis, 2, 0);
  const PoissonResult r = poisson_solve(y20, unit);
  double eig = 0.0;
  for (std::size_t k = 0; k < y20.size(); ++k) eig = std::max(eig, std::abs(r.solution[k] + y20[k] / 6.0));
  double res = r.residual_inf / r.rhs_inf;

  // the time flat right-hand side on the configured surface, or a seeded field
  const ExtrinsicData& x = *c.extr;
  ScalarField f = divergence(x.alpha, x);
  if (sup_norm(f) == 0.0) {
    auto rng = c.rng(5);
    f = random_field(*x.basis, rng);
    const double m = mean(f, x);
    for (double& v : f) v -= m;
  }
  const PoissonResult p = poisson_solve(f, x);
  res = std::max(res, p.residual_inf / p.rhs_inf);
  const bool pass = eig <= 1e-6 && res <= c.config.tol.poisson;
  return {"poisson_eigen", pass, res, c.config.tol.poisson, "Y20 eigen error " + fmt(eig) + " (limit 1e-6)", 0.0};
}

CheckResult split_identity(const Context& c) {
  const ExtrinsicData& x = *c.extr;
  const PlaneReport p = variation_plane(x, c.model);
  double err = 0.0;
  for (const auto& [name, beta] : beta_cases(c)) {
    const VariationReport v = variation_main(x, beta, c.model);
    const CylinderReport cy = variation_cylinder(x, beta, c.model);
    err = std::max(err, std::abs(p.total * p.normalization + cy.total * cy.normalization - v.mass_rate()));
  }
  return {"split_identity", err <= c.config.tol.split, err, c.config.tol.split, "mass-rate difference", 0.0};
}

CheckResult bhms_equality(const Context& c) {
  const ExtrinsicData& x = *c.extr;
  double rel = 0.0, u = 0.0;
  for (const auto& [name, beta] : beta_cases(c)) {
    const VariationReport v = variation_main(x, beta, c.model);
    const BhmsReport b = bhms_report(x, beta, c.model);
    const double scale = std::abs(v.line1) + std::abs(v.line2) + std::abs(v.line3) + std::abs(v.line4) + std::abs(v.line5);
    const double d = std::abs(b.total - v.total);
    rel = std::max(rel, scale > 0.0 ? d / scale : d);
    u = std::max({u, b.U_r_error, b.U_t_error});
  }
  const bool pass = rel <= c.config.tol.bhms && u <= c.config.tol.u;
  return {"bhms_equality", pass, rel, c.config.tol.bhms, "U error " + fmt(u) + " (limit " + fmt(c.config.tol.u) + ")", 0.0};
}

CheckResult lemma_certificates(const Context& c) {
  const ExtrinsicData& x = *c.extr;
  const double tol = c.config.tol.certificate;
  CertificateOptions co;
  co.delta = c.config.delta;
  co.tol = tol;
  double worst = 0.0;
  bool pass = true;
  std::ostringstream detail;
  // constructed: the profile's condition holds by construction and must be met
  auto apply = [&](const std::string& label, const ScalarField& beta, const ThetaSpec& theta, CertificateCase kase,
                   bool constructed) {
    try {
      const MonotonicityCertificate m = monotonicity_certificate(x, beta, theta, kase, co);
      const double deficit = m.F_scale > 0.0 ? -m.F_integral / m.F_scale : (m.F_integral < 0.0 ? 1.0 : 0.0);
      const bool applies = m.condition_residual <= tol;
      if (applies) {
        worst = std::max(worst, deficit);
        if (deficit > tol) pass = false;
      } else if (constructed) {
        pass = false;
      }
      detail << label << ": residual " << fmt(m.condition_residual) << (applies ? ", F deficit " + fmt(deficit) : ", not applicable")
             << "; ";
    } catch (const BetaOutOfRange&) {
      detail << label << ": beta out of range, skipped; ";
    }
  };
  const ScalarField div = divergence(x.alpha, x);
  ScalarField minus(div);
  for (double& v : minus) v = -v;
  apply("case1 theta=0", ScalarField(x.size(), 0.0), ThetaSpec::zero(), CertificateCase::Case1_NuH, false);
  apply("case1 theta=x", poisson_solve(minus, x).solution, ThetaSpec::identity(), CertificateCase::Case1_NuH, true);
  ScalarField tb = poisson_solve(div, x).solution;
  for (double& v : tb) v = std::tanh(v);
  apply("case2 theta=0", tb, ThetaSpec::zero(), CertificateCase::Case2_NuXi, true);
  if (c.config.theta_given) apply("configured", c.beta, c.config.theta, c.config.certificate_case, false);
  return {"lemma_certificates", pass, worst, tol, detail.str(), 0.0};
}

CheckResult fd_oracle(const Context& c) {
  const Tolerances& t = c.config.tol;
  const FlowOptions fo = flow_options(c.config);
  const FlowState st = make_state(build_surface(c.config.surface, c.model, c.config.n_theta, c.config.n_phi), 0.0,
                                  c.model, c.config.beta, fo);
  const double formula = variation_main(*st.extr, st.beta, c.model).mass_rate();
  const double fd = fd_mass_derivative(st, c.model, c.config.beta, t.fd_step, fo);
  const double err = std::abs(formula - fd);
  const double limit = std::max(t.fd_rel * std::abs(fd), t.fd_abs);
  return {"fd_oracle", err <= limit, err, limit, "formula " + fmt(formula) + ", difference quotient " + fmt(fd), 0.0};
}

CheckResult gauss_bonnet(const Context& c) {
  const double err = std::abs(integrate(c.extr->gauss_K, *c.extr) - 4.0 * kPi);
  return {"gauss_bonnet", err <= c.config.tol.gauss_bonnet, err, c.config.tol.gauss_bonnet, "", 0.0};
}

CheckResult frame_transform(const Context& c) {
  const ExtrinsicData& x = *c.extr;
  ScalarField beta = c.beta;
  if (sup_norm(beta) == 0.0) beta = resolve_beta(BetaStrategy::prescribed({{1, 0, 0.4}, {2, 2, 0.2}}), x);
  const ThetaSpec theta{{0.0, 1.0, 0.0, 0.5}};
  ScalarField composed(x.size()), angle(x.size());
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
  const double err = max_abs_diff(f.alpha, expected);
  return {"frame_transform", err <= c.config.tol.transform, err, c.config.tol.transform, "", 0.0};
}

CheckResult schema_check(const Context& c) {
  std::vector<std::string> bad;
  auto note = [&](const std::string& doc, const std::vector<std::string>& keys) {
    for (const auto& k : keys) bad.push_back(doc + ":" + k);
  };
  // config round trip
  const json cj = to_json(c.config);
  if (to_json(parse_config(cj)) != cj) bad.push_back("config:round-trip");

  // small documents from a coarse copy of the configured run
  RunConfig small = c.config;
  small.n_theta = 16;
  small.n_phi = 32;
  small.s_max = 2.0 * std::min(small.ds, small.ds_max);
  const Evaluation e = evaluate_surface(small, c.model);
  note("mass.json", missing_mass_keys(json::parse(mass_document(small, e).dump())));
  note("variation.json", missing_variation_keys(json::parse(
                             variation_document(e.variation, e.plane, e.cylinder, e.bhms, e.certificate).dump())));
  RunOptions ro = run_options(small);
  const Trajectory t = run(build_surface(small.surface, c.model, 16, 32), c.model, small.beta, ro);
  note("summary.json", missing_summary_keys(json::parse(summary_document(small, t).dump())));

  std::ostringstream csv;
  write_trajectory_header(csv);
  for (const auto& r : t.records) write_trajectory_row(csv, r);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  const auto columns = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  const auto expect = columns(kTrajectoryHeader);
  if (line != kTrajectoryHeader) bad.push_back("trajectory.csv:header");
  while (std::getline(lines, line))
    if (columns(line) != expect) bad.push_back("trajectory.csv:row width");

  std::string detail;
  for (const auto& b : bad) detail += b + " ";
  return {"schema_check", bad.empty(), static_cast<double>(bad.size()), 0.5, detail, 0.0};
}

std::vector<Event> sample_events(const Context& c, std::size_t count) {
  const ExtrinsicData& x = *c.extr;
  std::vector<Event> out;
  const std::size_t stride = std::max<std::size_t>(1, x.size() / count);
  for (std::size_t k = 0; k < x.size() && out.size() < count; k += stride) out.emplace_back(x.events[k]);
  return out;
}

CheckResult christoffel_fd(const Context& c) {
  double err = 0.0;
  for (const Event& p : sample_events(c, 24)) {
    const Christoffel a = c.model.christoffel_at(p);
    const Christoffel b = c.model.christoffel_fd(p);
    for (int mu = 0; mu < 4; ++mu) {
      const double scale = std::max(1.0, a[mu].cwiseAbs().maxCoeff());
      err = std::max(err, (a[mu] - b[mu]).cwiseAbs().maxCoeff() / scale);
    }
  }
  return {"christoffel_fd", err <= c.config.tol.christoffel, err, c.config.tol.christoffel, "", 0.0};
}

CheckResult dec_sample(const Context& c) {
  double worst = 0.0;
  bool pass = true;
  std::uint64_t salt = 0;
  for (const Event& p : sample_events(c, 8)) {
    const DecReport r = dec_sample_check(c.model, p, 256, c.config.seed + salt++, c.config.tol.dec);
    worst = std::max(worst, -r.min_value);
    pass = pass && r.pass;
  }
  return {"dec_sample", pass, std::max(worst, 0.0), c.config.tol.dec, "largest negative G(u, v)", 0.0};
}

using CheckFn = CheckResult (*)(const Context&);

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> r{
      {"frame_orthonormality", frame_orthonormality},
      {"perp_involution", perp_involution},
      {"trace_identities", trace_identities},
      {"divergence_theorem", divergence_theorem},
      {"poisson_eigen", poisson_eigen},
      {"split_identity", split_identity},
      {"bhms_equality", bhms_equality},
      {"lemma_certificates", lemma_certificates},
      {"fd_oracle", fd_oracle},
      {"gauss_bonnet", gauss_bonnet},
      {"frame_transform", frame_transform},
      {"schema_check", schema_check},
      {"christoffel_fd", christoffel_fd},
      {"dec_sample", dec_sample},
  };
  return r;
}

}  // namespace

json VerifyReport::to_json() const {
  json arr = json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name},
                   {"pass", c.pass},
                   {"error", std::isfinite(c.error) ? json(c.error) : json(nullptr)},
                   {"tolerance", c.tolerance},
                   {"detail", c.detail}});
  return {{"schema", kVerifySchema}, {"seed", seed}, {"pass", pass}, {"checks", arr}};
}

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

VerifyReport run_verify(const RunConfig& config, const std::vector<std::string>& only) {
  for (const auto& n : only)
    if (std::find(check_names().begin(), check_names().end(), n) == check_names().end())
      throw ConfigError("verify: unknown check '" + n + "'");

  Context ctx{config, make_spacetime(config.spacetime), nullptr, {}};
  const SurfaceGrid grid = build_surface(config.surface, ctx.model, config.n_theta, config.n_phi);
  ctx.extr = std::make_shared<const ExtrinsicData>(extrinsic_geometry(grid, ctx.model));
  ctx.beta = resolve_beta(config.beta, *ctx.extr, flow_options(config));

  VerifyReport report;
  report.seed = config.seed;
  report.pass = true;
  for (const auto& [name, fn] : registry()) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = fn(ctx);
    } catch (const Error& e) {
      // a check that cannot run counts as failed
      r = {name, false, std::numeric_limits<double>::infinity(), 0.0, std::string("error: ") + e.what(), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.pass = report.pass && r.pass;
    report.checks.push_back(std::move(r));
  }
  return report;
}

}  // namespace hflow
