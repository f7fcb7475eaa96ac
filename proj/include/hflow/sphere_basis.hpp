#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Dense>

namespace hflow {

/// Packed spherical-harmonic coefficients a_lm for 0 <= m <= mmax, m <= l <= lmax.
/// A real field is f = sum_l a_l0 P_l0 + 2 Re sum_{m>0} a_lm P_lm e^{i m phi},
/// with P_lm the orthonormal associated Legendre functions on [-1, 1].
using Spectrum = Eigen::VectorXcd;

enum class Deriv { Value, Theta, Phi, ThetaTheta, ThetaPhi, PhiPhi };

/// Gauss-Legendre nodes in theta times equispaced phi, with a spectral
/// transform pair. Node index is i * n_phi + j (i over theta, j over phi).
class SphereBasis {
 public:
  SphereBasis(int n_theta, int n_phi);
  ~SphereBasis();
  SphereBasis(const SphereBasis&) = delete;
  SphereBasis& operator=(const SphereBasis&) = delete;

  /// Shared instance per grid size.
  static std::shared_ptr<const SphereBasis> get(int n_theta, int n_phi);

  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t size() const { return static_cast<std::size_t>(n_theta_) * n_phi_; }
  int lmax() const { return lmax_; }
  int mmax() const { return mmax_; }
  std::size_t spectrum_size() const { return spectrum_size_; }
  std::size_t offset(int m) const { return offsets_[m]; }
  std::size_t index(int l, int m) const { return offsets_[m] + (l - m); }

  double theta(int i) const { return theta_[i]; }
  double phi(int j) const { return phi_[j]; }
  /// Gauss weight in x = cos(theta).
  double weight(int i) const { return weight_[i]; }
  /// Quadrature weight of a node on the unit sphere: w_i * 2pi / n_phi.
  double node_weight(int i) const;

  /// Orthonormal P_lm(cos theta_i) and its first theta derivative.
  double legendre(int l, int m, int i) const;
  double legendre_dtheta(int l, int m, int i) const;

  /// Real orthonormal spherical harmonic: m > 0 uses cos(m phi), m < 0 sin(|m| phi).
  static double real_ylm(int l, int m, double theta, double phi);

  std::vector<Spectrum> analyze(const std::vector<const double*>& fields) const;
  Spectrum analyze(const std::vector<double>& field) const;

  std::vector<std::vector<double>> synthesize(const std::vector<const Spectrum*>& spectra, Deriv kind) const;
  std::vector<double> synthesize(const Spectrum& spectrum, Deriv kind = Deriv::Value) const;

  /// Transpose of synthesize(kind) seen as a map from real coefficient pairs
  /// (Re a_lm, Im a_lm) to node values; returned in the same packing.
  Spectrum synthesize_adjoint(const std::vector<double>& nodal, Deriv kind) const;

  /// Cartesian unit vectors of the parameter sphere at node (i, j).
  Eigen::Vector3d e_r(int i, int j) const;
  Eigen::Vector3d e_theta(int i, int j) const;
  Eigen::Vector3d e_phi(int i, int j) const;

 private:
  void forward_rows(const double* field, Eigen::MatrixXd& re, Eigen::MatrixXd& im, int col) const;
  const Eigen::MatrixXd& table(int m, Deriv kind) const;

  int n_theta_, n_phi_, lmax_, mmax_;
  std::size_t spectrum_size_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<double> theta_, phi_, weight_, cos_, sin_;
  // per m: (n_theta x (lmax - m + 1)) tables of P, dP/dtheta, d2P/dtheta2
  std::vector<Eigen::MatrixXd> p_, dp_, ddp_;
  // per m: weighted transpose used by analysis, ((lmax - m + 1) x n_theta)
  std::vector<Eigen::MatrixXd> analysis_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

}  // namespace hflow
