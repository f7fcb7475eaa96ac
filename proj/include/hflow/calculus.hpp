#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "hflow/sphere_basis.hpp"

namespace hflow {

using ScalarField = std::vector<double>;

/// Covariant components (f_theta, f_phi) in the coordinate basis.
struct OneFormField {
  ScalarField theta, phi;
};

/// Contravariant components (X^theta, X^phi) in the coordinate basis.
struct TangentVectorField {
  ScalarField theta, phi;
};

/// Induced metric data needed by the intrinsic operators. `rho` is the area
/// density relative to the unit parameter sphere, sqrt(det h) / sin(theta),
/// and `dA` already contains the quadrature weight.
struct IntrinsicGeometry {
  std::shared_ptr<const SphereBasis> basis;
  std::vector<Eigen::Matrix2d> h, h_inv;
  ScalarField rho, dA;
  double area = 0.0;

  std::size_t size() const { return dA.size(); }
  /// Fills h_inv, rho, dA and area from h. Throws DegenerateInducedMetric.
  void finalize_metric();
};

double integrate(const ScalarField& f, const IntrinsicGeometry& geo);
double mean(const ScalarField& f, const IntrinsicGeometry& geo);
/// sqrt(integral f^2 dA)
double l2_norm(const ScalarField& f, const IntrinsicGeometry& geo);
double sup_norm(const ScalarField& f);

OneFormField differential(const ScalarField& f, const IntrinsicGeometry& geo);
TangentVectorField raise(const OneFormField& w, const IntrinsicGeometry& geo);
OneFormField lower(const TangentVectorField& x, const IntrinsicGeometry& geo);
/// h^{ab} u_a v_b per node.
ScalarField dot(const OneFormField& u, const OneFormField& v, const IntrinsicGeometry& geo);
ScalarField norm2(const OneFormField& u, const IntrinsicGeometry& geo);

TangentVectorField gradient(const ScalarField& f, const IntrinsicGeometry& geo);
ScalarField divergence(const TangentVectorField& x, const IntrinsicGeometry& geo);
/// Divergence of the vector dual to a one-form.
ScalarField divergence(const OneFormField& w, const IntrinsicGeometry& geo);
/// divergence(gradient(f)).
ScalarField laplacian(const ScalarField& f, const IntrinsicGeometry& geo);

struct PoissonOptions {
  double rel_tol = 1e-10;
  int max_iterations = 10000;
  // compatibility: |int f| <= compat_rel * int |f| + compat_abs * area
  double compat_rel = 1e-6;
  double compat_abs = 1e-11;
  // extra Galerkin solves on the collocation defect
  int defect_sweeps = 30;
};

struct PoissonResult {
  ScalarField solution;
  int iterations = 0;
  double relative_residual = 0.0;
  /// max |laplacian(solution) - f| at nodes, f taken after mean removal
  double residual_inf = 0.0;
  double rhs_inf = 0.0;
  double mean_removed = 0.0;
};

/// Solves laplacian(beta) = f with mean-zero beta. Throws Incompatible and
/// NoConvergence.
PoissonResult poisson_solve(const ScalarField& f, const IntrinsicGeometry& geo, const PoissonOptions& opt = {});

struct EulerCharacteristic {
  int chi = 0;
  double raw = 0.0;
  double gap = 0.0;
};

/// round(int K dA / 2 pi). Throws AmbiguousTopology if the rounding gap exceeds 0.1.
EulerCharacteristic euler_characteristic(const ScalarField& gauss_K, const IntrinsicGeometry& geo);

/// Nodal evaluation of a real spherical harmonic on the parameter grid.
ScalarField harmonic_field(const SphereBasis& basis, int l, int m);

}  // namespace hflow
