#include "hflow/report.hpp"

#include <cmath>
#include <iomanip>

namespace hflow {

using nlohmann::json;

namespace {

// NaN and inf are not JSON; write null instead
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void missing(const json& j, const std::string& prefix, std::initializer_list<const char*> keys,
             std::vector<std::string>& out) {
  for (const char* k : keys)
    if (!j.is_object() || !j.contains(k)) out.push_back(prefix + k);
}

void csv_double(std::ostream& out, double v) {
  if (std::isfinite(v)) out << v;
  else out << "nan";
}

}  // namespace

json to_json(const MassReport& r) {
  return {{"area", num(r.area)}, {"willmore", num(r.willmore)}, {"m_H", num(r.m_H)}};
}

json to_json(const VariationReport& r) {
  return {{"chi", r.chi},           {"line1", num(r.line1)}, {"line2", num(r.line2)},
          {"line3", num(r.line3)},  {"line4", num(r.line4)}, {"line5", num(r.line5)},
          {"total", num(r.total)},  {"normalization", num(r.normalization)},
          {"mass_rate", num(r.mass_rate())}};
}

json to_json(const PlaneReport& r) {
  return {{"line1", num(r.line1)},         {"einstein", num(r.einstein)}, {"traceless", num(r.traceless)},
          {"gradient", num(r.gradient)},   {"total", num(r.total)},       {"normalization", num(r.normalization)},
          {"mass_rate", num(r.total * r.normalization)}};
}

json to_json(const CylinderReport& r) {
  return {{"einstein", num(r.einstein)},     {"traceless", num(r.traceless)}, {"gradient", num(r.gradient)},
          {"divergence", num(r.divergence)}, {"total", num(r.total)},         {"normalization", num(r.normalization)},
          {"mass_rate", num(r.total * r.normalization)}};
}

json to_json(const BhmsReport& r) {
  return {{"phi_null", num(r.phi_null)}, {"g_term", num(r.g_term)},       {"theta_T", num(r.theta_T)},
          {"theta_L", num(r.theta_L)},   {"u_term", num(r.u_term)},       {"radial", num(r.radial)},
          {"timelike", num(r.timelike)}, {"total", num(r.total)},         {"U_r_error", num(r.U_r_error)},
          {"U_t_error", num(r.U_t_error)}};
}

json to_json(const MonotonicityCertificate& c) {
  return {{"case", to_string(c.kase)},
          {"theta", c.theta.describe()},
          {"condition_residual", num(c.condition_residual)},
          {"F_integral", num(c.F_integral)},
          {"F_scale", num(c.F_scale)},
          {"v_condition_min", num(c.v_condition_min)},
          {"tol", num(c.tol)},
          {"pass", c.pass}};
}

json to_json(const FlowSummary& s) {
  return {{"steps", s.steps},
          {"rejected", s.rejected},
          {"s_final", num(s.s_final)},
          {"area_ratio", num(s.area_ratio)},
          {"area_law_error", num(s.area_law_error)},
          {"mass_initial", num(s.mass_initial)},
          {"mass_final", num(s.mass_final)},
          {"mass_drift", num(s.mass_drift)},
          {"min_mass_step", num(s.min_mass_step)},
          {"certificate_pass_rate", num(s.certificate_pass_rate)},
          {"max_fd_mismatch", num(s.max_fd_mismatch)},
          {"max_normalization_error", num(s.max_normalization_error)},
          {"min_mesh_q", num(s.min_mesh_q)},
          {"mesh_warnings", s.mesh_warnings},
          {"monotone", s.monotone}};
}

json variation_document(const VariationReport& v, const PlaneReport& p, const CylinderReport& c, const BhmsReport& b,
                        const MonotonicityCertificate& cert) {
  return {{"schema", kVariationSchema},
          {"variation", to_json(v)},
          {"plane", to_json(p)},
          {"cylinder", to_json(c)},
          {"split_error", num(std::abs(p.total + c.total - v.total))},
          {"bhms", to_json(b)},
          {"bhms_error", num(std::abs(b.total - v.total))},
          {"certificate", to_json(cert)}};
}

Evaluation evaluate_surface(const RunConfig& config, const Spacetime& model) {
  Evaluation e;
  const SurfaceGrid grid = build_surface(config.surface, model, config.n_theta, config.n_phi);
  e.extr = std::make_shared<const ExtrinsicData>(extrinsic_geometry(grid, model));
  const ExtrinsicData& x = *e.extr;
  e.beta = resolve_beta(config.beta, x, flow_options(config));
  e.mass = hawking_mass(x);
  e.variation = variation_main(x, e.beta, model);
  e.plane = variation_plane(x, model);
  e.cylinder = variation_cylinder(x, e.beta, model);
  e.bhms = bhms_report(x, e.beta, model);
  CertificateOptions co;
  co.delta = config.delta;
  co.tol = config.tol.certificate;
  e.certificate = monotonicity_certificate(x, e.beta, certificate_theta(config), config.certificate_case, co);
  return e;
}

json mass_document(const RunConfig& config, const Evaluation& e) {
  const AdmissibilityReport adm = admissibility_check(*e.extr);
  return {{"schema", kMassSchema},
          {"config", to_json(config)},
          {"mass", to_json(e.mass)},
          {"chi", e.variation.chi},
          {"admissibility", {{"pass", adm.pass}, {"min_H_sq", num(adm.min_H_sq)}, {"eps_adm", num(adm.eps_adm)}}}};
}

json summary_document(const RunConfig& config, const Trajectory& t) {
  json j{{"schema", kSummarySchema},
         {"config", to_json(config)},
         {"completed", t.completed},
         {"summary", to_json(t.summary)}};
  if (!t.completed) j["error"] = {{"type", t.error_type}, {"message", t.error}};
  return j;
}

void write_trajectory_header(std::ostream& out) { out << kTrajectoryHeader << '\n'; }

void write_trajectory_row(std::ostream& out, const TrajectoryRecord& r) {
  out << std::setprecision(17);
  for (double v : {r.s, r.area, r.m_H, r.line1, r.line2, r.line3, r.line4, r.line5, r.total, r.fd_check, r.sup_beta,
                   r.cond_residual, r.F_integral}) {
    csv_double(out, v);
    out << ',';
  }
  csv_double(out, r.mesh_q);
  out << '\n';
}

void write_integrands_csv(std::ostream& out, const ExtrinsicData& extr, const ScalarField& beta,
                          const VariationReport& v, const MonotonicityCertificate& cert) {
  const SphereBasis& b = *extr.basis;
  out << "i,j,theta,phi,dA,beta,einstein,traceless,gradient,divergence,F\n" << std::setprecision(17);
  const auto& in = v.integrands;
  for (int i = 0; i < b.n_theta(); ++i)
    for (int j = 0; j < b.n_phi(); ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * b.n_phi() + j;
      out << i << ',' << j << ',' << b.theta(i) << ',' << b.phi(j) << ',' << extr.dA[k] << ',' << beta[k] << ','
          << in.einstein[k] << ',' << in.traceless[k] << ',' << in.gradient[k] << ',' << in.divergence[k] << ',';
      csv_double(out, k < cert.F.size() ? cert.F[k] : std::nan(""));
      out << '\n';
    }
}

void write_bhms_csv(std::ostream& out, const ExtrinsicData& extr, const BhmsReport& r) {
  const SphereBasis& b = *extr.basis;
  out << "i,j,theta,phi,dA,theta_T_r,theta_T_t,theta_L_r,theta_L_t,u_density\n" << std::setprecision(17);
  for (int i = 0; i < b.n_theta(); ++i)
    for (int j = 0; j < b.n_phi(); ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * b.n_phi() + j;
      out << i << ',' << j << ',' << b.theta(i) << ',' << b.phi(j) << ',' << extr.dA[k] << ',' << r.theta_T_r[k]
          << ',' << r.theta_T_t[k] << ',' << r.theta_L_r[k] << ',' << r.theta_L_t[k] << ',' << r.u_density[k]
          << '\n';
    }
}

std::vector<std::string> missing_mass_keys(const json& j) {
  std::vector<std::string> out;
  missing(j, "", {"schema", "config", "mass", "chi", "admissibility"}, out);
  if (j.contains("mass")) missing(j["mass"], "mass.", {"area", "willmore", "m_H"}, out);
  return out;
}

std::vector<std::string> missing_variation_keys(const json& j) {
  std::vector<std::string> out;
  missing(j, "", {"schema", "variation", "plane", "cylinder", "split_error", "bhms", "bhms_error", "certificate"}, out);
  if (j.contains("variation"))
    missing(j["variation"], "variation.",
            {"chi", "line1", "line2", "line3", "line4", "line5", "total", "normalization", "mass_rate"}, out);
  if (j.contains("bhms")) missing(j["bhms"], "bhms.", {"radial", "timelike", "total", "U_r_error", "U_t_error"}, out);
  if (j.contains("certificate"))
    missing(j["certificate"], "certificate.", {"case", "theta", "condition_residual", "F_integral", "pass"}, out);
  return out;
}

std::vector<std::string> missing_summary_keys(const json& j) {
  std::vector<std::string> out;
  missing(j, "", {"schema", "config", "completed", "summary"}, out);
  if (j.contains("summary"))
    missing(j["summary"], "summary.",
            {"steps", "s_final", "area_ratio", "mass_drift", "min_mass_step", "certificate_pass_rate", "monotone"},
            out);
  return out;
}

std::vector<std::string> missing_verify_keys(const json& j) {
  std::vector<std::string> out;
  missing(j, "", {"schema", "seed", "pass", "checks"}, out);
  if (j.contains("checks") && j["checks"].is_array())
    for (std::size_t i = 0; i < j["checks"].size(); ++i)
      missing(j["checks"][i], "checks[" + std::to_string(i) + "].", {"name", "pass", "error", "tolerance"}, out);
  return out;
}

}  // namespace hflow
