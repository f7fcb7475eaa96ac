#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hflow {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// A point of the chart, coordinates (t, x1, x2, x3) in geometric units.
struct Event {
  Vec4 coords = Vec4::Zero();

  Event() = default;
  explicit Event(const Vec4& c) : coords(c) {}
  Event(double t, double x1, double x2, double x3) : coords(t, x1, x2, x3) {}

  double t() const { return coords[0]; }
  double spatial_radius() const { return coords.tail<3>().norm(); }
};

/// Gamma[mu](alpha, beta) = Γ^μ_{αβ}.
using Christoffel = std::array<Mat4, 4>;

/// Metric with first and second coordinate derivatives at one event.
/// dg[k](i,j) = ∂_k g_ij and ddg[k][l](i,j) = ∂_k ∂_l g_ij.
struct MetricJet {
  Mat4 g = Mat4::Zero();
  std::array<Mat4, 4> dg{};
  std::array<std::array<Mat4, 4>, 4> ddg{};

  MetricJet() {
    for (auto& d : dg) d.setZero();
    for (auto& row : ddg)
      for (auto& d : row) d.setZero();
  }
};

/// Fully covariant Riemann tensor R_{abcd}, with R(∂c,∂d)∂b = R^a_{bcd} ∂a
/// lowered on the first slot. Sectional numerator: R(X,Y,X,Y)... see
/// sectional_numerator().
struct Riemann {
  std::array<double, 256> r{};
  double operator()(int a, int b, int c, int d) const { return r[((a * 4 + b) * 4 + c) * 4 + d]; }
  double& operator()(int a, int b, int c, int d) { return r[((a * 4 + b) * 4 + c) * 4 + d]; }
  /// ⟨R(X,Y)Y, X⟩, positive for spheres.
  double sectional_numerator(const Vec4& x, const Vec4& y) const;
};

struct CurvatureBundle {
  Mat4 ricci = Mat4::Zero();
  double scalar = 0.0;
  Mat4 einstein = Mat4::Zero();
};

enum class SpacetimeKind {
  Minkowski,
  SchwarzschildStandard,
  SchwarzschildIsotropic,
  DeSitterStatic,
  NumericTable
};

std::string to_string(SpacetimeKind kind);

/// Regular 4D lattice of metric samples with quadrilinear interpolation.
/// Derivatives are lattice finite differences, interpolated the same way.
class MetricTable {
 public:
  static constexpr int kComponents = 10;

  /// Reads `t,x1,x2,x3,g00,g01,g02,g03,g11,g12,g13,g22,g23,g33` rows.
  static MetricTable from_csv(std::istream& in);
  static MetricTable load(const std::string& path);

  /// Samples `metric` on the tensor lattice spanned by `axes`.
  template <class MetricFn>
  static MetricTable sample(const std::array<std::vector<double>, 4>& axes, MetricFn&& metric);

  void write_csv(std::ostream& out) const;

  bool contains(const Vec4& x) const;
  Mat4 metric(const Vec4& x) const;
  MetricJet jet(const Vec4& x) const;
  const std::array<std::vector<double>, 4>& axes() const { return axes_; }

 private:
  MetricTable(std::array<std::vector<double>, 4> axes, std::vector<std::array<double, kComponents>> values);
  void build_derivatives();
  std::size_t index(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const;
  template <class Fn>
  void interpolate(const Vec4& x, Fn&& accumulate) const;

  std::array<std::vector<double>, 4> axes_;
  std::vector<std::array<double, kComponents>> g_;
  // first derivatives per axis and second derivatives per ordered axis pair
  std::array<std::vector<std::array<double, kComponents>>, 4> dg_;
  std::array<std::array<std::vector<std::array<double, kComponents>>, 4>, 4> ddg_;
};

/// Immutable metric background. All queries are pure functions of the event.
class Spacetime {
 public:
  struct Params {
    double mass = 0.0;
    double hubble_length = 0.0;
    // Schwarzschild: r >= r_h (1 + margin); de Sitter: r <= L (1 - margin).
    double margin = 0.05;
    // relative step for finite-difference fallbacks, h = fd_step (1 + |x|)
    double fd_step = 1e-4;
  };

  static Spacetime minkowski();
  static Spacetime schwarzschild(double mass, double margin = 0.05);
  static Spacetime schwarzschild_isotropic(double mass, double margin = 0.05);
  static Spacetime de_sitter_static(double hubble_length, double margin = 0.05);
  static Spacetime numeric_table(std::shared_ptr<const MetricTable> table, double fd_step = 1e-4);

  SpacetimeKind kind() const { return kind_; }
  const Params& params() const { return params_; }
  const MetricTable* table() const { return table_.get(); }

  bool in_domain(const Event& p) const;
  /// Throws OutOfChart with a description of the violated bound.
  void require_domain(const Event& p) const;

  Mat4 metric_at(const Event& p) const;
  MetricJet jet_at(const Event& p) const;
  Christoffel christoffel_at(const Event& p) const;
  /// Fourth-order central differences of metric_at; independent of the jets.
  Christoffel christoffel_fd(const Event& p) const;
  Riemann riemann_at(const Event& p) const;
  /// Closed form for built-ins, lattice jets for tables.
  CurvatureBundle einstein_at(const Event& p) const;
  /// Generic path: nested fourth-order differences of metric_at only.
  CurvatureBundle einstein_fd(const Event& p) const;

  double inner(const Event& p, const Vec4& u, const Vec4& v) const;

 private:
  Spacetime(SpacetimeKind kind, Params params, std::shared_ptr<const MetricTable> table = nullptr)
      : kind_(kind), params_(params), table_(std::move(table)) {}

  MetricJet analytic_jet(const Event& p, int order) const;

  SpacetimeKind kind_;
  Params params_;
  std::shared_ptr<const MetricTable> table_;
};

Christoffel christoffel_from_jet(const MetricJet& jet);
Riemann riemann_from_jet(const MetricJet& jet);
/// Ricci contraction and G = Ric - (R/2) g.
CurvatureBundle curvature_from_riemann(const Riemann& riemann, const Mat4& g);

/// True iff the eigenvalue signs are (-,+,+,+).
bool has_lorentzian_signature(const Mat4& g);

struct DecReport {
  bool pass = false;
  double min_value = 0.0;
  double tolerance = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
  Vec4 argmin_u = Vec4::Zero();
  Vec4 argmin_v = Vec4::Zero();
};

/// Samples pairs of future-causal vectors (unit tetrad time component,
/// spatial speed in [0,1], a quarter of them null) and reports min G(u,v).
DecReport dec_sample_check(const Spacetime& model, const Event& p, int trials,
                           std::uint64_t seed = 0xC0FFEE, double tolerance = 1e-10);

// --------------------------------------------------------------------------

template <class MetricFn>
MetricTable MetricTable::sample(const std::array<std::vector<double>, 4>& axes, MetricFn&& metric) {
  std::vector<std::array<double, kComponents>> values;
  values.reserve(axes[0].size() * axes[1].size() * axes[2].size() * axes[3].size());
  for (double t : axes[0])
    for (double x : axes[1])
      for (double y : axes[2])
        for (double z : axes[3]) {
          const Mat4 g = metric(Vec4(t, x, y, z));
          std::array<double, kComponents> row{};
          int c = 0;
          for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) row[c++] = g(i, j);
          values.push_back(row);
        }
  return MetricTable(axes, std::move(values));
}

}  // namespace hflow
