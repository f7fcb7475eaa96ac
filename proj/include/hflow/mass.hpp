#pragma once

#include <string>
#include <vector>

#include "hflow/calculus.hpp"
#include "hflow/spacetime.hpp"
#include "hflow/surface.hpp"

namespace hflow {

struct MassReport {
  double area = 0.0;
  double willmore = 0.0;  // integral of <H, H>
  double m_H = 0.0;
};

MassReport hawking_mass(const ExtrinsicData& extr);

/// sqrt(area / (16 pi)^3): converts a normalized rate into dm_H/ds.
double mass_rate_normalization(double area);

/// Pointwise integrands of the variation formula (line 1 is topological).
struct VariationIntegrands {
  ScalarField einstein;   // 2 G(-H_perp, xi_perp)
  ScalarField traceless;  // |R|^2 + 2 beta <R, T> + |T|^2, R, T trace-free II_r, II_t
  ScalarField gradient;   // 2 (|dH/H|^2 + 2 beta alpha(dH/H) + |alpha|^2)
  ScalarField divergence; // 2 beta div alpha
};

struct VariationReport {
  int chi = 2;
  double line1 = 0.0, line2 = 0.0, line3 = 0.0, line4 = 0.0, line5 = 0.0;
  double total = 0.0;
  double normalization = 0.0;
  VariationIntegrands integrands;

  /// dm_H/ds.
  double mass_rate() const { return total * normalization; }
};

/// Normalized mass variation for the flow xi = I + beta I_perp.
VariationReport variation_main(const ExtrinsicData& extr, const ScalarField& beta, const Spacetime& model);

/// Contribution of xi_r = I alone.
struct PlaneReport {
  double line1 = 0.0;
  double einstein = 0.0;   // 2 G(-H_perp, I_perp)
  double traceless = 0.0;  // |R|^2 + |T|^2
  double gradient = 0.0;   // 2 (|dH/H|^2 + |alpha|^2)
  double total = 0.0;
  double normalization = 0.0;
};

/// Contribution of xi_t = beta I_perp alone.
struct CylinderReport {
  double einstein = 0.0;    // 2 G(-H_perp, beta I)
  double traceless = 0.0;   // 2 beta <R, T>
  double gradient = 0.0;    // 4 beta alpha(dH/H)
  double divergence = 0.0;  // 2 beta div alpha
  double total = 0.0;
  double normalization = 0.0;
};

PlaneReport variation_plane(const ExtrinsicData& extr, const Spacetime& model);
CylinderReport variation_cylinder(const ExtrinsicData& extr, const ScalarField& beta, const Spacetime& model);

/// Connection one-form U of a normal field xi = A l + B k in a null frame,
/// U(X) = (<l, D_X(B k)>/B - <k, D_X(A l)>/A) / (2 phi), phi = -<l, k>.
/// Nodes where |A| or |B| is at most `cutoff` are left at zero.
OneFormField null_frame_connection(const ExtrinsicData& extr, const std::vector<Vec4>& xi, const std::vector<Vec4>& l,
                                   const std::vector<Vec4>& k, double cutoff = 0.0);

struct BhmsOptions {
  // U of the timelike part is compared with -alpha where |beta| > cutoff * sup|beta|
  double u_cutoff = 1e-2;
};

struct BhmsReport {
  std::vector<Vec4> l, k;
  double phi_null = 2.0;
  ScalarField A_r, B_r, A_t, B_t;
  OneFormField U_r, U_t;
  std::vector<char> U_t_valid;
  double U_r_error = 0.0;  // max component of |U_r + alpha|
  double U_t_error = 0.0;  // same, over valid nodes
  ScalarField psi;         // radial part: e^{2 psi} = <I, I>
  ScalarField theta_T_r, theta_T_t, theta_L_r, theta_L_t;  // 16 pi times the densities
  ScalarField u_density;  // -2 div(U) <xi, -H_perp>
  double g_term = 0.0;
  double theta_T = 0.0, theta_L = 0.0;
  double u_term = 0.0;
  double radial = 0.0, timelike = 0.0;
  double total = 0.0;
};

/// Mass variation in the null-frame form. Throws TopologyMismatch unless chi = 2.
BhmsReport bhms_report(const ExtrinsicData& extr, const ScalarField& beta, const Spacetime& model,
                       const BhmsOptions& opt = {});

/// Nondecreasing profile Theta(x) = sum c_n x^n.
struct ThetaSpec {
  std::vector<double> coeffs;

  static ThetaSpec zero() { return {}; }
  static ThetaSpec identity() { return {{0.0, 1.0}}; }

  double operator()(double x) const;
  double derivative(double x) const;
  std::string describe() const;
};

enum class CertificateCase { Case1_NuH, Case2_NuXi };

std::string to_string(CertificateCase c);

struct CertificateOptions {
  double delta = 0.01;  // sup|beta| <= 1 - delta
  double tol = 1e-8;
  int samples = 2001;   // sampling of Theta' and the V condition on (-1, 1)
};

struct MonotonicityCertificate {
  CertificateCase kase = CertificateCase::Case1_NuH;
  ThetaSpec theta;
  double condition_residual = 0.0;  // L2 norm of div alpha of the certified frame
  double F_integral = 0.0;
  double F_scale = 0.0;             // integral of the positive part of the density
  double v_condition_min = 0.0;     // min of V (V (1 - x^2) - 1) over the samples
  double tol = 0.0;
  ScalarField F;
  bool pass = false;
};

/// Throws BetaOutOfRange and ThetaNotMonotone.
MonotonicityCertificate monotonicity_certificate(const ExtrinsicData& extr, const ScalarField& beta,
                                                 const ThetaSpec& theta, CertificateCase kase,
                                                 const CertificateOptions& opt = {});

/// 2 G(-H_perp, v_perp) per node for a normal vector field v.
ScalarField einstein_density(const ExtrinsicData& extr, const Spacetime& model, const std::vector<Vec4>& v);

}  // namespace hflow
