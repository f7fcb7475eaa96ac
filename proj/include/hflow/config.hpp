#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hflow/flow.hpp"
#include "hflow/mass.hpp"
#include "hflow/spacetime.hpp"
#include "hflow/surface.hpp"

namespace hflow {

inline constexpr const char* kConfigSchema = "hflow-config/1";

struct SpacetimeConfig {
  SpacetimeKind kind = SpacetimeKind::Minkowski;
  double mass = 0.0;
  double hubble_length = 0.0;
  double margin = 0.05;
  double fd_step = 1e-4;
  std::string table;  // NumericTable CSV path
};

struct Tolerances {
  double mass = 1e-8;
  double fd_rel = 1e-4;
  double fd_abs = 1e-6;
  double fd_step = 1e-3;
  double split = 1e-10;
  double bhms = 1e-8;
  double u = 1e-9;
  double certificate = 1e-8;
  double poisson = 1e-8;
  double frame = 1e-10;
  double perp = 1e-12;
  double divergence = 1e-10;
  double gauss_bonnet = 1e-8;
  double transform = 1e-10;
  double trace = 1e-8;
  double christoffel = 1e-6;
  double dec = 1e-10;
};

struct RunConfig {
  SpacetimeConfig spacetime;
  SurfaceFamilySpec surface;
  int n_theta = 32;
  int n_phi = 64;
  BetaStrategy beta;
  double delta = 0.01;
  double s_max = 1.0;
  double ds = 1e-2;
  double ds_max = 1e-2;
  int max_halvings = 8;
  double area_tol = 1e-6;
  bool stability_cap = true;
  double mesh_floor = 0.05;
  CertificateCase certificate_case = CertificateCase::Case1_NuH;
  ThetaSpec theta;
  bool theta_given = false;
  Tolerances tol;
  std::uint64_t seed = 0xC0FFEE;
  std::string output;
};

/// Tilted bumpy sphere in Schwarzschild with a smooth beta profile; the
/// verification default.
RunConfig default_config();

/// Throws ConfigError with the offending key.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

Spacetime make_spacetime(const SpacetimeConfig& c);
FlowOptions flow_options(const RunConfig& c);
RunOptions run_options(const RunConfig& c);
/// Certificate profile: the configured one, or the strategy default.
ThetaSpec certificate_theta(const RunConfig& c);

}  // namespace hflow
