#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hflow/calculus.hpp"
#include "hflow/mass.hpp"
#include "hflow/spacetime.hpp"
#include "hflow/surface.hpp"

namespace hflow {

struct BetaStrategy {
  enum class Kind { Zero, Constant, Prescribed, TimeFlatPoisson };

  Kind kind = Kind::Zero;
  double constant = 0.0;
  std::vector<HarmonicCoeff> coeffs;  // Prescribed: beta(theta, phi) = sum c Y_lm

  static BetaStrategy zero() { return {}; }
  static BetaStrategy constant_value(double c) { return {Kind::Constant, c, {}}; }
  static BetaStrategy prescribed(std::vector<HarmonicCoeff> c) { return {Kind::Prescribed, 0.0, std::move(c)}; }
  static BetaStrategy time_flat_poisson() { return {Kind::TimeFlatPoisson, 0.0, {}}; }

  std::string name() const;
};

struct FlowOptions {
  double delta = 0.01;      // sup|beta| <= 1 - delta
  double ds_max = 1e-2;
  int max_halvings = 8;
  double area_tol = 1e-6;   // area-law defect allowed per unit of s
  bool stability_cap = true;
  double stability_factor = 2.0;  // ds <= factor / lambda_max
  PoissonOptions poisson;
};

/// Throws BetaOutOfRange if sup|beta| > 1 - delta.
ScalarField resolve_beta(const BetaStrategy& strategy, const ExtrinsicData& extr, const FlowOptions& opt = {});

/// xi = I + beta perp(I), I = -H / <H, H>.
std::vector<Vec4> flow_velocity(const ExtrinsicData& extr, const ScalarField& beta);

/// Largest |<-H, xi> - 1| over the nodes.
double flow_normalization_error(const ExtrinsicData& extr, const std::vector<Vec4>& xi);

struct FlowState {
  double s = 0.0;
  SurfaceGrid grid;
  ScalarField beta;
  std::shared_ptr<const ExtrinsicData> extr;
};

/// Full geometry and beta at a grid. Propagates geometry and beta errors.
FlowState make_state(SurfaceGrid grid, double s, const Spacetime& model, const BetaStrategy& strategy,
                     const FlowOptions& opt = {});

/// One classical Runge-Kutta step of size ds (negative allowed), no rejection.
FlowState rk4_step(const FlowState& state, const Spacetime& model, const BetaStrategy& strategy, double ds,
                   const FlowOptions& opt = {});

/// Step-size bound from the parabolic part of the flow.
double stable_step(const ExtrinsicData& extr, const ScalarField& beta, const FlowOptions& opt = {});

/// Runge-Kutta step with halving on geometry failure or area-law defect.
/// Throws StepFailed after max_halvings retries. `taken` receives the step used.
FlowState step(const FlowState& state, const Spacetime& model, const BetaStrategy& strategy, double ds,
               const FlowOptions& opt = {}, double* taken = nullptr);

/// [m_H(+ds) - m_H(-ds)] / (2 ds) with single Runge-Kutta steps.
double fd_mass_derivative(const FlowState& state, const Spacetime& model, const BetaStrategy& strategy, double ds,
                          const FlowOptions& opt = {});

struct TrajectoryRecord {
  double s = 0.0;
  double ds = 0.0;  // step that produced this record
  double area = 0.0;
  double m_H = 0.0;
  double line1 = 0.0, line2 = 0.0, line3 = 0.0, line4 = 0.0, line5 = 0.0;
  double total = 0.0;
  double mass_rate = 0.0;  // total times the normalization
  double fd_check = 0.0;   // centered difference of m_H along the trajectory
  double sup_beta = 0.0;
  double cond_residual = 0.0;
  double F_integral = 0.0;
  bool certificate_pass = false;
  double mesh_q = 0.0;
  double normalization_error = 0.0;
  bool mesh_warning = false;
};

struct FlowSummary {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  double s_final = 0.0;
  double area_ratio = 0.0;
  double area_law_error = 0.0;  // max |area / (area0 e^s) - 1|
  double mass_initial = 0.0, mass_final = 0.0;
  double mass_drift = 0.0;      // max |m_H - m_H(0)|
  double min_mass_step = 0.0;   // min step-to-step change of m_H
  double certificate_pass_rate = 0.0;
  double max_fd_mismatch = 0.0; // max |fd_check - mass_rate| over interior records
  double max_normalization_error = 0.0;
  double min_mesh_q = 1.0;
  std::size_t mesh_warnings = 0;
  bool monotone = false;
};

struct RunOptions {
  double s_max = 1.0;
  double ds = 1e-2;
  double monotone_tol = 1e-8;
  double mesh_floor = 0.05;
  bool certificate = true;
  CertificateOptions certificate_options;
  CertificateCase certificate_case = CertificateCase::Case1_NuH;
  std::optional<ThetaSpec> theta;  // default_theta(strategy) when unset
  FlowOptions flow;
  std::function<void(const TrajectoryRecord&)> on_record;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  FlowSummary summary;
  bool completed = false;
  std::string error;  // set when the run stopped early
  std::string error_type;
  FlowState final_state;
};

/// The certificate family used for a strategy: Theta = x in the nu_H frame for
/// the Poisson strategy, Theta = 0 otherwise.
ThetaSpec default_theta(const BetaStrategy& strategy);

/// Flows to s_max. Geometry or step failures end the run with a partial trajectory.
Trajectory run(const SurfaceGrid& initial, const Spacetime& model, const BetaStrategy& strategy,
               const RunOptions& opt = {});

}  // namespace hflow
