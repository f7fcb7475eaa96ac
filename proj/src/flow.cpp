#include "hflow/flow.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <typeinfo>

#include "hflow/errors.hpp"

namespace hflow {
namespace {

GeometryOptions stage_geometry(const BetaStrategy& strategy) {
  GeometryOptions g;
  g.gauss_curvature = false;
  g.connection = strategy.kind == BetaStrategy::Kind::TimeFlatPoisson;
  return g;
}

struct Stage {
  ExtrinsicData extr;
  ScalarField beta;
  std::vector<Vec4> velocity;
};

Stage evaluate_stage(const SurfaceGrid& grid, const Spacetime& model, const BetaStrategy& strategy,
                     const FlowOptions& opt) {
  Stage st{extrinsic_geometry(grid, model, stage_geometry(strategy)), {}, {}};
  st.beta = resolve_beta(strategy, st.extr, opt);
  st.velocity = flow_velocity(st.extr, st.beta);
  return st;
}

SurfaceGrid displaced(const SurfaceGrid& grid, const std::vector<Vec4>& v, double h) {
  SurfaceGrid out = grid;
  for (std::size_t k = 0; k < out.events.size(); ++k) out.events[k] += h * v[k];
  return out;
}

std::string error_name(const std::exception& e) {
  if (dynamic_cast<const StepFailed*>(&e)) return "StepFailed";
  if (dynamic_cast<const NotAdmissible*>(&e)) return "NotAdmissible";
  if (dynamic_cast<const BetaOutOfRange*>(&e)) return "BetaOutOfRange";
  if (dynamic_cast<const OutOfChart*>(&e)) return "OutOfChart";
  if (dynamic_cast<const GeometryError*>(&e)) return "GeometryError";
  if (dynamic_cast<const NoConvergence*>(&e)) return "NoConvergence";
  if (dynamic_cast<const Incompatible*>(&e)) return "Incompatible";
  return "Error";
}

}  // namespace

std::string BetaStrategy::name() const {
  switch (kind) {
    case Kind::Zero: return "Zero";
    case Kind::Constant: return "Constant";
    case Kind::Prescribed: return "Prescribed";
    case Kind::TimeFlatPoisson: return "TimeFlatPoisson";
  }
  return "?";
}

ScalarField resolve_beta(const BetaStrategy& strategy, const ExtrinsicData& extr, const FlowOptions& opt) {
  const std::size_t n = extr.size();
  const SphereBasis& b = *extr.basis;
  ScalarField beta(n, 0.0);
  switch (strategy.kind) {
    case BetaStrategy::Kind::Zero: break;
    case BetaStrategy::Kind::Constant: beta.assign(n, strategy.constant); break;
    case BetaStrategy::Kind::Prescribed:
      for (std::size_t k = 0; k < n; ++k) {
        const int i = static_cast<int>(k) / b.n_phi(), j = static_cast<int>(k) % b.n_phi();
        beta[k] = evaluate_harmonics(strategy.coeffs, b.theta(i), b.phi(j));
      }
      break;
    case BetaStrategy::Kind::TimeFlatPoisson: {
      if (extr.alpha.theta.size() != n) throw ConfigError("time flat beta needs the connection form");
      ScalarField f = divergence(extr.alpha, extr);
      for (double& v : f) v = -v;
      if (sup_norm(f) > 0.0) beta = poisson_solve(f, extr, opt.poisson).solution;
      break;
    }
  }
  const double sup = sup_norm(beta);
  if (!(sup <= 1.0 - opt.delta)) {
    std::ostringstream msg;
    msg << strategy.name() << " beta has sup|beta| = " << sup << " > 1 - delta = " << 1.0 - opt.delta;
    throw BetaOutOfRange(msg.str());
  }
  return beta;
}

std::vector<Vec4> flow_velocity(const ExtrinsicData& extr, const ScalarField& beta) {
  std::vector<Vec4> xi(extr.size());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const Vec4 I = -extr.H_vec[k] / extr.H_sq[k];
    xi[k] = I + beta[k] * perp_rotate(extr, k, I);
  }
  return xi;
}

double flow_normalization_error(const ExtrinsicData& extr, const std::vector<Vec4>& xi) {
  double e = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k)
    e = std::max(e, std::abs(-extr.H_vec[k].dot(extr.metric[k] * xi[k]) - 1.0));
  return e;
}

FlowState make_state(SurfaceGrid grid, double s, const Spacetime& model, const BetaStrategy& strategy,
                     const FlowOptions& opt) {
  FlowState st;
  st.s = s;
  auto extr = std::make_shared<ExtrinsicData>(extrinsic_geometry(grid, model));
  st.beta = resolve_beta(strategy, *extr, opt);
  st.extr = std::move(extr);
  st.grid = std::move(grid);
  return st;
}

FlowState rk4_step(const FlowState& state, const Spacetime& model, const BetaStrategy& strategy, double ds,
                   const FlowOptions& opt) {
  const std::vector<Vec4> k1 = flow_velocity(*state.extr, state.beta);
  const std::vector<Vec4> k2 = evaluate_stage(displaced(state.grid, k1, 0.5 * ds), model, strategy, opt).velocity;
  const std::vector<Vec4> k3 = evaluate_stage(displaced(state.grid, k2, 0.5 * ds), model, strategy, opt).velocity;
  const std::vector<Vec4> k4 = evaluate_stage(displaced(state.grid, k3, ds), model, strategy, opt).velocity;
  SurfaceGrid next = state.grid;
  for (std::size_t k = 0; k < next.events.size(); ++k)
    next.events[k] += ds / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
  return make_state(std::move(next), state.s + ds, model, strategy, opt);
}

double stable_step(const ExtrinsicData& extr, const ScalarField& beta, const FlowOptions& opt) {
  const double l = extr.basis->lmax();
  double lam = 0.0;
  for (std::size_t k = 0; k < extr.size(); ++k) lam = std::max(lam, 1.0 / (extr.H_sq[k] * extr.rho[k]));
  lam *= l * (l + 1.0) * (1.0 + sup_norm(beta));
  return opt.stability_factor / lam;
}

FlowState step(const FlowState& state, const Spacetime& model, const BetaStrategy& strategy, double ds,
               const FlowOptions& opt, double* taken) {
  // equalized steps can overshoot ds_max by roundoff
  double h = std::abs(ds) <= opt.ds_max * (1.0 + 1e-12) ? ds : std::copysign(opt.ds_max, ds);
  std::string last;
  for (int attempt = 0; attempt <= opt.max_halvings; ++attempt, h *= 0.5) {
    try {
      FlowState next = rk4_step(state, model, strategy, h, opt);
      const double defect = next.extr->area / (state.extr->area * std::exp(h)) - 1.0;
      if (std::abs(defect) > opt.area_tol * std::abs(h)) {
        std::ostringstream msg;
        msg << "area-law defect " << defect << " at ds = " << h;
        last = msg.str();
        continue;
      }
      if (taken) *taken = h;
      return next;
    } catch (const GeometryError& e) {
      last = e.what();
    } catch (const OutOfChart& e) {
      last = e.what();
    } catch (const BetaOutOfRange& e) {
      last = e.what();
    } catch (const NoConvergence& e) {
      last = e.what();
    }
  }
  std::ostringstream msg;
  msg << "step from s = " << state.s << " failed after " << opt.max_halvings << " halvings: " << last;
  throw StepFailed(msg.str());
}

double fd_mass_derivative(const FlowState& state, const Spacetime& model, const BetaStrategy& strategy, double ds,
                          const FlowOptions& opt) {
  const double plus = hawking_mass(*rk4_step(state, model, strategy, ds, opt).extr).m_H;
  const double minus = hawking_mass(*rk4_step(state, model, strategy, -ds, opt).extr).m_H;
  return (plus - minus) / (2.0 * ds);
}

ThetaSpec default_theta(const BetaStrategy& strategy) {
  return strategy.kind == BetaStrategy::Kind::TimeFlatPoisson ? ThetaSpec::identity() : ThetaSpec::zero();
}

namespace {

TrajectoryRecord make_record(const FlowState& st, double ds, const Spacetime& model, const RunOptions& opt,
                             const ThetaSpec& theta) {
  const ExtrinsicData& x = *st.extr;
  TrajectoryRecord r;
  r.s = st.s;
  r.ds = ds;
  r.area = x.area;
  r.m_H = hawking_mass(x).m_H;
  const VariationReport v = variation_main(x, st.beta, model);
  r.line1 = v.line1;
  r.line2 = v.line2;
  r.line3 = v.line3;
  r.line4 = v.line4;
  r.line5 = v.line5;
  r.total = v.total;
  r.mass_rate = v.mass_rate();
  r.sup_beta = sup_norm(st.beta);
  r.fd_check = std::numeric_limits<double>::quiet_NaN();
  r.cond_residual = std::numeric_limits<double>::quiet_NaN();
  r.F_integral = std::numeric_limits<double>::quiet_NaN();
  if (opt.certificate) {
    try {
      const MonotonicityCertificate c =
          monotonicity_certificate(x, st.beta, theta, opt.certificate_case, opt.certificate_options);
      r.cond_residual = c.condition_residual;
      r.F_integral = c.F_integral;
      r.certificate_pass = c.pass;
    } catch (const BetaOutOfRange&) {
      r.certificate_pass = false;
    }
  }
  r.mesh_q = mesh_quality(x);
  r.mesh_warning = r.mesh_q < opt.mesh_floor;
  r.normalization_error = flow_normalization_error(x, flow_velocity(x, st.beta));
  return r;
}

void finish(Trajectory& t, const RunOptions& opt) {
  auto& rec = t.records;
  const std::size_t n = rec.size();
  for (std::size_t k = 0; k < n && n > 1; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 < n ? k + 1 : k;
    rec[k].fd_check = (rec[b].m_H - rec[a].m_H) / (rec[b].s - rec[a].s);
  }
  FlowSummary& s = t.summary;
  if (n == 0) return;
  s.steps = n - 1;
  s.s_final = rec.back().s;
  s.area_ratio = rec.back().area / rec.front().area;
  s.mass_initial = rec.front().m_H;
  s.mass_final = rec.back().m_H;
  s.min_mass_step = n > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  std::size_t passed = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = rec[k];
    s.area_law_error = std::max(s.area_law_error, std::abs(r.area / (rec.front().area * std::exp(r.s - rec.front().s)) - 1.0));
    s.mass_drift = std::max(s.mass_drift, std::abs(r.m_H - s.mass_initial));
    if (k > 0) s.min_mass_step = std::min(s.min_mass_step, r.m_H - rec[k - 1].m_H);
    if (k > 0 && k + 1 < n) s.max_fd_mismatch = std::max(s.max_fd_mismatch, std::abs(r.fd_check - r.mass_rate));
    if (r.certificate_pass) ++passed;
    s.max_normalization_error = std::max(s.max_normalization_error, r.normalization_error);
    s.min_mesh_q = std::min(s.min_mesh_q, r.mesh_q);
    if (r.mesh_warning) ++s.mesh_warnings;
  }
  s.certificate_pass_rate = static_cast<double>(passed) / static_cast<double>(n);
  s.monotone = s.min_mass_step >= -opt.monotone_tol;
}

}  // namespace

Trajectory run(const SurfaceGrid& initial, const Spacetime& model, const BetaStrategy& strategy,
               const RunOptions& opt) {
  Trajectory t;
  const ThetaSpec theta = opt.theta ? *opt.theta : default_theta(strategy);
  FlowState st = make_state(initial, 0.0, model, strategy, opt.flow);
  auto emit = [&](const FlowState& state, double ds) {
    t.records.push_back(make_record(state, ds, model, opt, theta));
    if (opt.on_record) opt.on_record(t.records.back());
  };
  emit(st, 0.0);
  const double eps = 1e-12 * std::max(1.0, opt.s_max);
  try {
    while (st.s < opt.s_max - eps) {
      double h = std::min(opt.ds, opt.flow.ds_max);
      if (opt.flow.stability_cap) h = std::min(h, stable_step(*st.extr, st.beta, opt.flow));
      // equal steps to the end, so no sliver step is left over
      const double rest = opt.s_max - st.s;
      h = rest / std::ceil(rest / h - 1e-9);
      double taken = h;
      st = step(st, model, strategy, h, opt.flow, &taken);
      if (taken < h) ++t.summary.rejected;
      emit(st, taken);
    }
    t.completed = true;
  } catch (const Error& e) {
    t.error = e.what();
    t.error_type = error_name(e);
  }
  t.final_state = st;
  finish(t, opt);
  return t;
}

}  // namespace hflow
