#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hflow/config.hpp"
#include "hflow/flow.hpp"
#include "hflow/mass.hpp"

namespace hflow {

nlohmann::json to_json(const MassReport& r);
nlohmann::json to_json(const VariationReport& r);  // per-line values only
nlohmann::json to_json(const PlaneReport& r);
nlohmann::json to_json(const CylinderReport& r);
nlohmann::json to_json(const BhmsReport& r);  // scalars only
nlohmann::json to_json(const MonotonicityCertificate& c);
nlohmann::json to_json(const FlowSummary& s);

inline constexpr const char* kMassSchema = "hflow-mass/1";
inline constexpr const char* kVariationSchema = "hflow-variation/1";
inline constexpr const char* kSummarySchema = "hflow-summary/1";

/// Everything `hflow evaluate` reports for one surface.
struct Evaluation {
  std::shared_ptr<const ExtrinsicData> extr;
  ScalarField beta;
  MassReport mass;
  VariationReport variation;
  PlaneReport plane;
  CylinderReport cylinder;
  BhmsReport bhms;
  MonotonicityCertificate certificate;
};

/// Builds the configured surface and evaluates every report. Propagates
/// geometry, beta and certificate errors.
Evaluation evaluate_surface(const RunConfig& config, const Spacetime& model);

nlohmann::json mass_document(const RunConfig& config, const Evaluation& e);
nlohmann::json summary_document(const RunConfig& config, const Trajectory& t);

/// variation.json: main report, plane/cylinder split, null-frame form, certificate.
nlohmann::json variation_document(const VariationReport& v, const PlaneReport& p, const CylinderReport& c,
                                  const BhmsReport& b, const MonotonicityCertificate& cert);

inline constexpr const char* kTrajectoryHeader =
    "s,area,m_H,line1,line2,line3,line4,line5,total,fd_check,sup_beta,cond_residual,F_integral,mesh_q";

void write_trajectory_header(std::ostream& out);
void write_trajectory_row(std::ostream& out, const TrajectoryRecord& r);

/// Per-node variation integrands: `i,j,theta,phi,dA,beta,einstein,traceless,gradient,divergence,F`.
void write_integrands_csv(std::ostream& out, const ExtrinsicData& extr, const ScalarField& beta,
                          const VariationReport& v, const MonotonicityCertificate& cert);

/// Per-node null-frame densities: `i,j,theta,phi,dA,theta_T_r,theta_T_t,theta_L_r,theta_L_t,u_density`.
void write_bhms_csv(std::ostream& out, const ExtrinsicData& extr, const BhmsReport& b);

/// Required keys of each written document; returns the missing ones (dotted paths).
std::vector<std::string> missing_mass_keys(const nlohmann::json& j);
std::vector<std::string> missing_variation_keys(const nlohmann::json& j);
std::vector<std::string> missing_summary_keys(const nlohmann::json& j);
std::vector<std::string> missing_verify_keys(const nlohmann::json& j);

}  // namespace hflow
