#include "hflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hflow/errors.hpp"

namespace hflow {
namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  s.erase(std::remove(s.begin(), s.end(), '_'), s.end());
  return s;
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items())
    if (!ok.count(key)) fail(where, "unknown key '" + key + "'");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "not finite");
  return v;
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

double positive(const json& j, const char* key, double fallback, const std::string& where) {
  const double v = number_or(j, key, fallback, where);
  if (!(v > 0.0)) fail(where + "." + key, "must be positive");
  return v;
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<int>();
}

std::vector<HarmonicCoeff> harmonics(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of {l, m, value}");
  std::vector<HarmonicCoeff> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    allow_keys(j[i], w, {"l", "m", "value"});
    HarmonicCoeff c;
    c.l = integer(j[i].at("l"), w + ".l");
    c.m = integer(j[i].at("m"), w + ".m");
    c.value = number(j[i].at("value"), w + ".value");
    if (c.l < 0 || std::abs(c.m) > c.l) fail(w, "need l >= 0 and |m| <= l");
    out.push_back(c);
  }
  return out;
}

json harmonics_json(const std::vector<HarmonicCoeff>& cs) {
  json a = json::array();
  for (const auto& c : cs) a.push_back({{"l", c.l}, {"m", c.m}, {"value", c.value}});
  return a;
}

Eigen::Vector3d vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) fail(where, "expected 3 numbers");
  return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

// sizes of the form 2^k * odd with a small odd part
bool grid_size_ok(int n) {
  if (n < 16) return false;
  while (n % 2 == 0) n /= 2;
  return n <= 15;
}

const std::map<std::string, SpacetimeKind>& kind_names() {
  static const std::map<std::string, SpacetimeKind> m{
      {"minkowski", SpacetimeKind::Minkowski},
      {"schwarzschild", SpacetimeKind::SchwarzschildStandard},
      {"schwarzschildstandard", SpacetimeKind::SchwarzschildStandard},
      {"schwarzschildisotropic", SpacetimeKind::SchwarzschildIsotropic},
      {"desitter", SpacetimeKind::DeSitterStatic},
      {"desitterstatic", SpacetimeKind::DeSitterStatic},
      {"numerictable", SpacetimeKind::NumericTable},
  };
  return m;
}

const char* kind_label(SpacetimeKind k) {
  switch (k) {
    case SpacetimeKind::Minkowski: return "Minkowski";
    case SpacetimeKind::SchwarzschildStandard: return "SchwarzschildStandard";
    case SpacetimeKind::SchwarzschildIsotropic: return "SchwarzschildIsotropic";
    case SpacetimeKind::DeSitterStatic: return "DeSitterStatic";
    case SpacetimeKind::NumericTable: return "NumericTable";
  }
  return "?";
}

SpacetimeConfig parse_spacetime(const json& j) {
  const std::string w = "spacetime";
  allow_keys(j, w, {"kind", "mass", "hubble_length", "margin", "fd_step", "table"});
  if (!j.contains("kind") || !j.at("kind").is_string()) fail(w + ".kind", "missing");
  SpacetimeConfig c;
  const auto it = kind_names().find(lower(j.at("kind").get<std::string>()));
  if (it == kind_names().end()) fail(w + ".kind", "unknown kind '" + j.at("kind").get<std::string>() + "'");
  c.kind = it->second;
  c.mass = number_or(j, "mass", 0.0, w);
  c.hubble_length = number_or(j, "hubble_length", 0.0, w);
  c.margin = number_or(j, "margin", 0.05, w);
  c.fd_step = positive(j, "fd_step", 1e-4, w);
  if (j.contains("table")) {
    if (!j.at("table").is_string()) fail(w + ".table", "expected a path");
    c.table = j.at("table").get<std::string>();
  }
  if (c.mass < 0.0) fail(w + ".mass", "must be >= 0");
  if (c.margin < 0.0 || c.margin >= 1.0) fail(w + ".margin", "must lie in [0, 1)");
  if (c.kind == SpacetimeKind::DeSitterStatic && !(c.hubble_length > 0.0))
    fail(w + ".hubble_length", "must be positive");
  if (c.kind == SpacetimeKind::NumericTable && c.table.empty()) fail(w + ".table", "required for NumericTable");
  return c;
}

void parse_surface(const json& j, RunConfig& c) {
  const std::string w = "surface";
  allow_keys(j, w, {"family", "radius", "semi_axes", "radial", "time_offsets", "t0", "center", "grid"});
  if (!j.contains("family") || !j.at("family").is_string()) fail(w + ".family", "missing");
  const std::string fam = lower(j.at("family").get<std::string>());
  SurfaceFamilySpec s;
  if (fam == "roundsphere") {
    s = SurfaceFamilySpec::round_sphere(positive(j, "radius", 1.0, w));
  } else if (fam == "ellipsoid") {
    if (!j.contains("semi_axes")) fail(w + ".semi_axes", "missing");
    const Eigen::Vector3d a = vec3(j.at("semi_axes"), w + ".semi_axes");
    if (!(a.minCoeff() > 0.0)) fail(w + ".semi_axes", "must be positive");
    s = SurfaceFamilySpec::ellipsoid(a[0], a[1], a[2]);
  } else if (fam == "radialgraph") {
    s = SurfaceFamilySpec::radial_graph(positive(j, "radius", 1.0, w),
                                        j.contains("radial") ? harmonics(j.at("radial"), w + ".radial")
                                                             : std::vector<HarmonicCoeff>{});
  } else {
    fail(w + ".family", "unknown family '" + j.at("family").get<std::string>() + "'");
  }
  if (fam != "radialgraph" && j.contains("radial")) fail(w + ".radial", "only for RadialGraph");
  if (j.contains("time_offsets")) s.time_offsets = harmonics(j.at("time_offsets"), w + ".time_offsets");
  s.t0 = number_or(j, "t0", 0.0, w);
  if (j.contains("center")) s.center = vec3(j.at("center"), w + ".center");
  c.surface = s;
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    allow_keys(g, w + ".grid", {"n_theta", "n_phi"});
    if (g.contains("n_theta")) c.n_theta = integer(g.at("n_theta"), w + ".grid.n_theta");
    c.n_phi = g.contains("n_phi") ? integer(g.at("n_phi"), w + ".grid.n_phi") : 2 * c.n_theta;
  }
  if (!grid_size_ok(c.n_theta)) fail(w + ".grid.n_theta", "need >= 16 and a power of two times an odd factor <= 15");
  if (!grid_size_ok(c.n_phi)) fail(w + ".grid.n_phi", "need >= 16 and a power of two times an odd factor <= 15");
}

void parse_beta(const json& j, RunConfig& c) {
  const std::string w = "beta";
  allow_keys(j, w, {"strategy", "value", "coeffs", "delta"});
  if (!j.contains("strategy") || !j.at("strategy").is_string()) fail(w + ".strategy", "missing");
  const std::string s = lower(j.at("strategy").get<std::string>());
  c.delta = number_or(j, "delta", 0.01, w);
  if (!(c.delta > 0.0 && c.delta < 1.0)) fail(w + ".delta", "must lie in (0, 1)");
  if (s == "zero") {
    c.beta = BetaStrategy::zero();
  } else if (s == "constant") {
    if (!j.contains("value")) fail(w + ".value", "missing");
    const double v = number(j.at("value"), w + ".value");
    if (std::abs(v) > 1.0 - c.delta) fail(w + ".value", "|beta| must not exceed 1 - delta");
    c.beta = BetaStrategy::constant_value(v);
  } else if (s == "prescribed") {
    if (!j.contains("coeffs")) fail(w + ".coeffs", "missing");
    c.beta = BetaStrategy::prescribed(harmonics(j.at("coeffs"), w + ".coeffs"));
  } else if (s == "timeflatpoisson") {
    c.beta = BetaStrategy::time_flat_poisson();
  } else {
    fail(w + ".strategy", "unknown strategy '" + j.at("strategy").get<std::string>() + "'");
  }
}

void parse_flow(const json& j, RunConfig& c) {
  const std::string w = "flow";
  allow_keys(j, w, {"s_max", "ds", "ds_max", "max_halvings", "area_tol", "stability_cap", "mesh_floor"});
  c.s_max = positive(j, "s_max", 1.0, w);
  c.ds_max = positive(j, "ds_max", 1e-2, w);
  c.ds = positive(j, "ds", c.ds_max, w);
  c.area_tol = positive(j, "area_tol", 1e-6, w);
  c.mesh_floor = positive(j, "mesh_floor", 0.05, w);
  if (j.contains("max_halvings")) {
    c.max_halvings = integer(j.at("max_halvings"), w + ".max_halvings");
    if (c.max_halvings < 0) fail(w + ".max_halvings", "must be >= 0");
  }
  if (j.contains("stability_cap")) {
    if (!j.at("stability_cap").is_boolean()) fail(w + ".stability_cap", "expected true or false");
    c.stability_cap = j.at("stability_cap").get<bool>();
  }
}

void parse_certificate(const json& j, RunConfig& c) {
  const std::string w = "certificate";
  allow_keys(j, w, {"case", "theta"});
  if (j.contains("case")) {
    if (!j.at("case").is_string()) fail(w + ".case", "expected a string");
    const std::string k = lower(j.at("case").get<std::string>());
    if (k == "case1nuh" || k == "case1") c.certificate_case = CertificateCase::Case1_NuH;
    else if (k == "case2nuxi" || k == "case2") c.certificate_case = CertificateCase::Case2_NuXi;
    else fail(w + ".case", "expected Case1_NuH or Case2_NuXi");
  }
  if (j.contains("theta")) {
    const json& t = j.at("theta");
    if (!t.is_array()) fail(w + ".theta", "expected polynomial coefficients");
    c.theta.coeffs.clear();
    for (std::size_t i = 0; i < t.size(); ++i) c.theta.coeffs.push_back(number(t[i], w + ".theta"));
    c.theta_given = true;
  }
}

void parse_tolerances(const json& j, Tolerances& t) {
  const std::string w = "tolerances";
  allow_keys(j, w,
             {"mass", "fd_rel", "fd_abs", "fd_step", "split", "bhms", "u", "certificate", "poisson", "frame", "perp",
              "divergence", "gauss_bonnet", "transform", "trace", "christoffel", "dec"});
  t.mass = positive(j, "mass", t.mass, w);
  t.fd_rel = positive(j, "fd_rel", t.fd_rel, w);
  t.fd_abs = positive(j, "fd_abs", t.fd_abs, w);
  t.fd_step = positive(j, "fd_step", t.fd_step, w);
  t.split = positive(j, "split", t.split, w);
  t.bhms = positive(j, "bhms", t.bhms, w);
  t.u = positive(j, "u", t.u, w);
  t.certificate = positive(j, "certificate", t.certificate, w);
  t.poisson = positive(j, "poisson", t.poisson, w);
  t.frame = positive(j, "frame", t.frame, w);
  t.perp = positive(j, "perp", t.perp, w);
  t.divergence = positive(j, "divergence", t.divergence, w);
  t.gauss_bonnet = positive(j, "gauss_bonnet", t.gauss_bonnet, w);
  t.transform = positive(j, "transform", t.transform, w);
  t.trace = positive(j, "trace", t.trace, w);
  t.christoffel = positive(j, "christoffel", t.christoffel, w);
  t.dec = positive(j, "dec", t.dec, w);
}

std::uint64_t parse_seed(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  if (j.is_string()) {
    try {
      std::size_t used = 0;
      const std::string s = j.get<std::string>();
      const std::uint64_t v = std::stoull(s, &used, 0);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  fail("seed", "expected a non-negative integer or a 0x-prefixed string");
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.spacetime.kind = SpacetimeKind::SchwarzschildStandard;
  c.spacetime.mass = 1.0;
  c.surface = SurfaceFamilySpec::time_perturbed(
      SurfaceFamilySpec::radial_graph(4.0, {{2, 1, 0.05}, {3, -2, 0.03}, {1, 1, 0.02}}), {{2, 0, 0.04}, {1, -1, 0.03}});
  c.beta = BetaStrategy::prescribed({{1, 1, 0.5}});
  return c;
}

RunConfig parse_config(const json& j) {
  allow_keys(j, "config", {"schema", "spacetime", "surface", "beta", "flow", "certificate", "tolerances", "seed", "output"});
  if (!j.contains("schema") || !j.at("schema").is_string() || j.at("schema").get<std::string>() != kConfigSchema)
    fail("schema", std::string("expected \"") + kConfigSchema + "\"");
  RunConfig c;
  if (!j.contains("spacetime")) fail("spacetime", "missing");
  if (!j.contains("surface")) fail("surface", "missing");
  c.spacetime = parse_spacetime(j.at("spacetime"));
  parse_surface(j.at("surface"), c);
  if (j.contains("beta")) parse_beta(j.at("beta"), c);
  if (j.contains("flow")) parse_flow(j.at("flow"), c);
  if (j.contains("certificate")) parse_certificate(j.at("certificate"), c);
  if (j.contains("tolerances")) parse_tolerances(j.at("tolerances"), c.tol);
  if (j.contains("seed")) c.seed = parse_seed(j.at("seed"));
  if (j.contains("output")) {
    if (!j.at("output").is_string()) fail("output", "expected a directory path");
    c.output = j.at("output").get<std::string>();
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json sp{{"kind", kind_label(c.spacetime.kind)},
          {"mass", c.spacetime.mass},
          {"hubble_length", c.spacetime.hubble_length},
          {"margin", c.spacetime.margin},
          {"fd_step", c.spacetime.fd_step}};
  if (!c.spacetime.table.empty()) sp["table"] = c.spacetime.table;

  const char* family = c.surface.family == SurfaceFamilySpec::Family::RoundSphere ? "RoundSphere"
                       : c.surface.family == SurfaceFamilySpec::Family::Ellipsoid ? "Ellipsoid"
                                                                                    : "RadialGraph";
  json su{{"family", family}, {"t0", c.surface.t0},
          {"center", {c.surface.center[0], c.surface.center[1], c.surface.center[2]}},
          {"grid", {{"n_theta", c.n_theta}, {"n_phi", c.n_phi}}}};
  switch (c.surface.family) {
    case SurfaceFamilySpec::Family::RoundSphere: su["radius"] = c.surface.radius; break;
    case SurfaceFamilySpec::Family::Ellipsoid:
      su["semi_axes"] = {c.surface.semi_axes[0], c.surface.semi_axes[1], c.surface.semi_axes[2]};
      break;
    case SurfaceFamilySpec::Family::RadialGraph:
      su["radius"] = c.surface.radius;
      su["radial"] = harmonics_json(c.surface.radial);
      break;
  }
  if (!c.surface.time_offsets.empty()) su["time_offsets"] = harmonics_json(c.surface.time_offsets);

  json be{{"strategy", c.beta.name()}, {"delta", c.delta}};
  if (c.beta.kind == BetaStrategy::Kind::Constant) be["value"] = c.beta.constant;
  if (c.beta.kind == BetaStrategy::Kind::Prescribed) be["coeffs"] = harmonics_json(c.beta.coeffs);

  json ce{{"case", to_string(c.certificate_case)}};
  if (c.theta_given) ce["theta"] = c.theta.coeffs;

  const Tolerances& t = c.tol;
  json out{
      {"schema", kConfigSchema},
      {"spacetime", sp},
      {"surface", su},
      {"beta", be},
      {"flow",
       {{"s_max", c.s_max},
        {"ds", c.ds},
        {"ds_max", c.ds_max},
        {"max_halvings", c.max_halvings},
        {"area_tol", c.area_tol},
        {"stability_cap", c.stability_cap},
        {"mesh_floor", c.mesh_floor}}},
      {"certificate", ce},
      {"tolerances",
       {{"mass", t.mass},         {"fd_rel", t.fd_rel},   {"fd_abs", t.fd_abs},
        {"fd_step", t.fd_step},   {"split", t.split},     {"bhms", t.bhms},
        {"u", t.u},               {"certificate", t.certificate}, {"poisson", t.poisson},
        {"frame", t.frame},       {"perp", t.perp},       {"divergence", t.divergence},
        {"gauss_bonnet", t.gauss_bonnet}, {"transform", t.transform}, {"trace", t.trace},
        {"christoffel", t.christoffel},   {"dec", t.dec}}},
      {"seed", c.seed},
  };
  if (!c.output.empty()) out["output"] = c.output;
  return out;
}

Spacetime make_spacetime(const SpacetimeConfig& c) {
  switch (c.kind) {
    case SpacetimeKind::Minkowski: return Spacetime::minkowski();
    case SpacetimeKind::SchwarzschildStandard: return Spacetime::schwarzschild(c.mass, c.margin);
    case SpacetimeKind::SchwarzschildIsotropic: return Spacetime::schwarzschild_isotropic(c.mass, c.margin);
    case SpacetimeKind::DeSitterStatic: return Spacetime::de_sitter_static(c.hubble_length, c.margin);
    case SpacetimeKind::NumericTable:
      return Spacetime::numeric_table(std::make_shared<MetricTable>(MetricTable::load(c.table)), c.fd_step);
  }
  throw ConfigError("config: unsupported spacetime kind");
}

FlowOptions flow_options(const RunConfig& c) {
  FlowOptions f;
  f.delta = c.delta;
  f.ds_max = c.ds_max;
  f.max_halvings = c.max_halvings;
  f.area_tol = c.area_tol;
  f.stability_cap = c.stability_cap;
  return f;
}

RunOptions run_options(const RunConfig& c) {
  RunOptions r;
  r.s_max = c.s_max;
  r.ds = c.ds;
  r.mesh_floor = c.mesh_floor;
  r.flow = flow_options(c);
  r.certificate_options.delta = c.delta;
  r.certificate_options.tol = c.tol.certificate;
  r.certificate_case = c.certificate_case;
  r.theta = certificate_theta(c);
  return r;
}

ThetaSpec certificate_theta(const RunConfig& c) { return c.theta_given ? c.theta : default_theta(c.beta); }

}  // namespace hflow
