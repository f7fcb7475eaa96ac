#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hflow/calculus.hpp"
#include "hflow/spacetime.hpp"
#include "hflow/sphere_basis.hpp"

namespace hflow {

/// Coefficient of a real orthonormal spherical harmonic Y_lm.
struct HarmonicCoeff {
  int l = 0;
  int m = 0;
  double value = 0.0;
};

/// Sum of c Y_lm(theta, phi).
double evaluate_harmonics(const std::vector<HarmonicCoeff>& coeffs, double theta, double phi);

struct SurfaceFamilySpec {
  enum class Family { RoundSphere, Ellipsoid, RadialGraph };

  Family family = Family::RoundSphere;
  double radius = 1.0;                      // RoundSphere radius, RadialGraph base radius
  Eigen::Vector3d semi_axes{1.0, 1.0, 1.0};  // Ellipsoid
  std::vector<HarmonicCoeff> radial;        // RadialGraph: r = radius + sum c Y_lm
  std::vector<HarmonicCoeff> time_offsets;  // TimePerturbed: t = t0 + sum eps Y_lm
  double t0 = 0.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  /// Parametrization rotation: node direction u is mapped to the shape at R u.
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  static SurfaceFamilySpec round_sphere(double r);
  static SurfaceFamilySpec ellipsoid(double a, double b, double c);
  static SurfaceFamilySpec radial_graph(double r, std::vector<HarmonicCoeff> coeffs);
  static SurfaceFamilySpec time_perturbed(SurfaceFamilySpec base, std::vector<HarmonicCoeff> eps);

  bool is_time_perturbed() const { return !time_offsets.empty(); }
  std::string family_name() const;
  /// Embedding of the parameter point (theta, phi).
  Vec4 embed(double theta, double phi) const;
};

/// Discretized embedding of S^2; events[i * n_phi + j].
struct SurfaceGrid {
  std::shared_ptr<const SphereBasis> basis;
  std::vector<Vec4> events;
  std::string chart;

  int n_theta() const { return basis->n_theta(); }
  int n_phi() const { return basis->n_phi(); }
  std::size_t size() const { return events.size(); }
  /// CSV `i,j,theta,phi,t,x1,x2,x3`.
  void write_csv(std::ostream& out) const;
};

/// Throws DegenerateSpec for bad parameters and OutOfChart for nodes outside the chart.
SurfaceGrid build_surface(const SurfaceFamilySpec& spec, const Spacetime& model, int n_theta, int n_phi);

struct NormalFrame {
  std::vector<Vec4> nu;       // outward spacelike unit normal, -H/|H|
  std::vector<Vec4> nu_perp;  // future timelike unit normal
};

struct GeometryOptions {
  bool gauss_curvature = true;
  bool connection = true;     // alpha_H
  bool trace_residuals = false;
  bool check_admissible = true;
  double eps_adm = -1.0;  // negative: default_eps_adm
};

/// Per-node extrinsic geometry of a surface. Second fundamental form
/// components are covariant in the (theta, phi) coordinate basis.
struct ExtrinsicData : IntrinsicGeometry {
  std::vector<Vec4> events;
  std::vector<Vec4> e_theta, e_phi;
  std::vector<Mat4> metric;
  std::vector<Christoffel> christoffel;
  std::vector<Vec4> H_vec;
  ScalarField H_sq;  // <H, H>
  ScalarField H;     // |H|
  NormalFrame frame;
  std::vector<Eigen::Matrix2d> II_r, II_t, ring_II_r, ring_II_t;
  OneFormField alpha;
  ScalarField gauss_K;
  // tension-field cross-check of the trace identities, when requested
  ScalarField trace_residual_r, trace_residual_t;
  double eps_adm = 0.0;

  double total_area() const { return area; }
};

ExtrinsicData extrinsic_geometry(const SurfaceGrid& grid, const Spacetime& model, const GeometryOptions& opt = {});

/// Components of a normal vector: v = a nu + b nu_perp.
struct NormalComponents {
  double a = 0.0;
  double b = 0.0;
};

/// v = a nu + b nu_perp  ->  b nu + a nu_perp. Throws NotNormal if v has a
/// tangential part above tol (relative to |v| + 1).
Vec4 perp_rotate(const ExtrinsicData& extr, std::size_t node, const Vec4& v, double tol = 1e-8);

struct RotatedFrame {
  NormalFrame frame;
  OneFormField alpha;  // by direct differentiation of the rotated frame
};

/// nu_theta = cosh(theta) nu + sinh(theta) nu_perp with its connection form.
RotatedFrame rotated_frame(const ExtrinsicData& extr, const ScalarField& angle);

struct AdmissibilityReport {
  bool pass = false;
  double min_H_sq = 0.0;
  double eps_adm = 0.0;
  std::size_t argmin = 0;
  double theta = 0.0, phi = 0.0;
};

/// 1e-6 * max(mean <H,H>, 16 pi / area).
double default_eps_adm(const ExtrinsicData& extr);

AdmissibilityReport admissibility_check(const ExtrinsicData& extr, double eps_adm = -1.0);

/// Euler characteristic from the stored Gauss curvature.
EulerCharacteristic euler_characteristic(const ExtrinsicData& extr);

/// min over nodes of the eigenvalue ratio of h relative to the round metric.
double mesh_quality(const ExtrinsicData& extr);

/// Connection form <nabla_X n, m> of two unit normal fields.
OneFormField normal_connection(const ExtrinsicData& extr, const std::vector<Vec4>& n, const std::vector<Vec4>& m);

}  // namespace hflow
