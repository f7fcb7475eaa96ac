#include "hflow/sphere_basis.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>
#include <gsl/gsl_integration.h>

#include "hflow/errors.hpp"

namespace hflow {
namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SphereBasis::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

SphereBasis::SphereBasis(int n_theta, int n_phi)
    : n_theta_(n_theta), n_phi_(n_phi), plans_(std::make_unique<Plans>()) {
  if (n_theta < 2 || n_phi < 4) throw ConfigError("sphere basis: grid too small");
  lmax_ = n_theta - 1;
  mmax_ = std::min(lmax_, (n_phi - 1) / 2);

  offsets_.resize(mmax_ + 2);
  offsets_[0] = 0;
  for (int m = 0; m <= mmax_; ++m) offsets_[m + 1] = offsets_[m] + (lmax_ - m + 1);
  spectrum_size_ = offsets_[mmax_ + 1];

  // Gauss-Legendre nodes on x = cos(theta), ordered so theta increases
  gsl_integration_glfixed_table* gl = gsl_integration_glfixed_table_alloc(n_theta);
  theta_.resize(n_theta);
  weight_.resize(n_theta);
  cos_.resize(n_theta);
  sin_.resize(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    double x = 0.0, w = 0.0;
    gsl_integration_glfixed_point(-1.0, 1.0, static_cast<size_t>(i), &x, &w, gl);
    // gsl's weights are only good to ~1e-11 for untabulated orders: one Newton
    // polish of the node, then the weight from P_n'
    long double xl = x, dp = 0.0L;
    for (int it = 0; it < 2; ++it) {
      long double p0 = 1.0L, p1 = xl;
      for (int k = 2; k <= n_theta; ++k) {
        const long double p2 = ((2 * k - 1) * xl * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n_theta * (xl * p1 - p0) / (xl * xl - 1.0L);
      if (it == 0) xl -= p1 / dp;
    }
    const int k = n_theta - 1 - i;  // gsl returns ascending x
    cos_[k] = static_cast<double>(xl);
    weight_[k] = static_cast<double>(2.0L / ((1.0L - xl * xl) * dp * dp));
  }
  gsl_integration_glfixed_table_free(gl);
  for (int i = 0; i < n_theta; ++i) {
    theta_[i] = std::acos(cos_[i]);
    sin_[i] = std::sqrt((1.0 - cos_[i]) * (1.0 + cos_[i]));
  }
  phi_.resize(n_phi);
  for (int j = 0; j < n_phi; ++j) phi_[j] = 2.0 * std::numbers::pi * j / n_phi;

  p_.resize(mmax_ + 1);
  dp_.resize(mmax_ + 1);
  ddp_.resize(mmax_ + 1);
  analysis_.resize(mmax_ + 1);
  for (int m = 0; m <= mmax_; ++m) {
    const int nl = lmax_ - m + 1;
    p_[m].resize(n_theta, nl);
    dp_[m].resize(n_theta, nl);
    ddp_[m].resize(n_theta, nl);
  }
  for (int i = 0; i < n_theta; ++i) {
    const double x = cos_[i], s = sin_[i];
    double pmm = 1.0 / std::sqrt(2.0);
    for (int m = 0; m <= mmax_; ++m) {
      if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
      double prev2 = 0.0, prev = pmm;
      p_[m](i, 0) = pmm;
      for (int l = m + 1; l <= lmax_; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - static_cast<double>(m) * m) /
                                   (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        const double cur = a * (x * prev - b * prev2);
        p_[m](i, l - m) = cur;
        prev2 = prev;
        prev = cur;
      }
      for (int l = m; l <= lmax_; ++l) {
        const double plm = p_[m](i, l - m);
        const double plm1 = l > m ? p_[m](i, l - 1 - m) : 0.0;
        const double c =
            l > m ? std::sqrt((2.0 * l + 1.0) * (static_cast<double>(l) * l - static_cast<double>(m) * m) / (2.0 * l - 1.0))
                  : 0.0;
        const double d1 = (l * x * plm - c * plm1) / s;
        dp_[m](i, l - m) = d1;
        ddp_[m](i, l - m) = -(x / s) * d1 - (l * (l + 1.0) - m * m / (s * s)) * plm;
      }
    }
  }
  for (int m = 0; m <= mmax_; ++m) {
    analysis_[m] = p_[m].transpose();
    for (int i = 0; i < n_theta; ++i) analysis_[m].col(i) *= weight_[i] / n_phi;
  }

  std::lock_guard<std::mutex> lock(planner_mutex());
  double* in = fftw_alloc_real(n_phi);
  fftw_complex* out = fftw_alloc_complex(n_phi / 2 + 1);
  plans_->r2c = fftw_plan_dft_r2c_1d(n_phi, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->c2r = fftw_plan_dft_c2r_1d(n_phi, out, in, FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(in);
  fftw_free(out);
}

SphereBasis::~SphereBasis() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (plans_->r2c) fftw_destroy_plan(plans_->r2c);
  if (plans_->c2r) fftw_destroy_plan(plans_->c2r);
}

std::shared_ptr<const SphereBasis> SphereBasis::get(int n_theta, int n_phi) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const SphereBasis>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{n_theta, n_phi}];
  if (!slot) slot = std::make_shared<SphereBasis>(n_theta, n_phi);
  return slot;
}

double SphereBasis::node_weight(int i) const { return weight_[i] * 2.0 * std::numbers::pi / n_phi_; }

double SphereBasis::legendre(int l, int m, int i) const { return p_[m](i, l - m); }
double SphereBasis::legendre_dtheta(int l, int m, int i) const { return dp_[m](i, l - m); }

double SphereBasis::real_ylm(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  if (am > l) throw ConfigError("real_ylm: |m| > l");
  const double x = std::cos(theta), s = std::sin(theta);
  double pmm = 1.0 / std::sqrt(2.0);
  for (int k = 1; k <= am; ++k) pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * s;
  double prev2 = 0.0, prev = pmm;
  for (int k = am + 1; k <= l; ++k) {
    const double a = std::sqrt((4.0 * k * k - 1.0) / (static_cast<double>(k) * k - static_cast<double>(am) * am));
    const double b = std::sqrt(((k - 1.0) * (k - 1.0) - static_cast<double>(am) * am) / (4.0 * (k - 1.0) * (k - 1.0) - 1.0));
    const double cur = a * (x * prev - b * prev2);
    prev2 = prev;
    prev = cur;
  }
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  if (m == 0) return norm * prev;
  if (m > 0) return norm * std::sqrt(2.0) * prev * std::cos(am * phi);
  return norm * std::sqrt(2.0) * prev * std::sin(am * phi);
}

void SphereBasis::forward_rows(const double* field, Eigen::MatrixXd& re, Eigen::MatrixXd& im, int col) const {
  // re/im hold G_m(theta_i) = sum_j f_ij e^{-i m phi_j}, laid out [m](i, col) via row blocks
  std::vector<double> row(n_phi_);
  std::vector<fftw_complex> spec(n_phi_ / 2 + 1);
  for (int i = 0; i < n_theta_; ++i) {
    std::copy(field + static_cast<std::size_t>(i) * n_phi_, field + static_cast<std::size_t>(i + 1) * n_phi_,
              row.begin());
    fftw_execute_dft_r2c(plans_->r2c, row.data(), spec.data());
    for (int m = 0; m <= mmax_; ++m) {
      re(m * n_theta_ + i, col) = spec[m][0];
      im(m * n_theta_ + i, col) = spec[m][1];
    }
  }
}

const Eigen::MatrixXd& SphereBasis::table(int m, Deriv kind) const {
  switch (kind) {
    case Deriv::Theta:
    case Deriv::ThetaPhi: return dp_[m];
    case Deriv::ThetaTheta: return ddp_[m];
    default: return p_[m];
  }
}

std::vector<Spectrum> SphereBasis::analyze(const std::vector<const double*>& fields) const {
  const int k = static_cast<int>(fields.size());
  Eigen::MatrixXd re((mmax_ + 1) * n_theta_, k), im((mmax_ + 1) * n_theta_, k);
  for (int c = 0; c < k; ++c) forward_rows(fields[c], re, im, c);
  std::vector<Spectrum> out(k, Spectrum::Zero(spectrum_size_));
  for (int m = 0; m <= mmax_; ++m) {
    const Eigen::MatrixXd ar = analysis_[m] * re.middleRows(m * n_theta_, n_theta_);
    const Eigen::MatrixXd ai = analysis_[m] * im.middleRows(m * n_theta_, n_theta_);
    for (int c = 0; c < k; ++c)
      for (int l = 0; l < ar.rows(); ++l)
        out[c][offsets_[m] + l] = {ar(l, c), m == 0 ? 0.0 : ai(l, c)};
  }
  return out;
}

Spectrum SphereBasis::analyze(const std::vector<double>& field) const {
  if (field.size() != size()) throw std::invalid_argument("analyze: field size mismatch");
  return analyze(std::vector<const double*>{field.data()}).front();
}

std::vector<std::vector<double>> SphereBasis::synthesize(const std::vector<const Spectrum*>& spectra,
                                                         Deriv kind) const {
  const int k = static_cast<int>(spectra.size());
  std::vector<std::vector<double>> out(k, std::vector<double>(size(), 0.0));
  // C_m = T_m A_m for each m, then an inverse real FFT per row
  std::vector<Eigen::MatrixXd> cre(mmax_ + 1), cim(mmax_ + 1);
  for (int m = 0; m <= mmax_; ++m) {
    const int nl = lmax_ - m + 1;
    Eigen::MatrixXd ar(nl, k), ai(nl, k);
    for (int c = 0; c < k; ++c)
      for (int l = 0; l < nl; ++l) {
        std::complex<double> a = (*spectra[c])[offsets_[m] + l];
        switch (kind) {
          case Deriv::Phi:
          case Deriv::ThetaPhi: a *= std::complex<double>(0.0, m); break;
          case Deriv::PhiPhi: a *= -static_cast<double>(m) * m; break;
          default: break;
        }
        ar(l, c) = a.real();
        ai(l, c) = a.imag();
      }
    const Eigen::MatrixXd& t = table(m, kind);
    cre[m] = t * ar;
    cim[m] = t * ai;
  }
  std::vector<fftw_complex> spec(n_phi_ / 2 + 1);
  std::vector<double> row(n_phi_);
  for (int c = 0; c < k; ++c)
    for (int i = 0; i < n_theta_; ++i) {
      for (auto& z : spec) z[0] = z[1] = 0.0;
      for (int m = 0; m <= mmax_; ++m) {
        spec[m][0] = cre[m](i, c);
        spec[m][1] = m == 0 ? 0.0 : cim[m](i, c);
      }
      fftw_execute_dft_c2r(plans_->c2r, spec.data(), row.data());
      std::copy(row.begin(), row.end(), out[c].begin() + static_cast<std::ptrdiff_t>(i) * n_phi_);
    }
  return out;
}

std::vector<double> SphereBasis::synthesize(const Spectrum& spectrum, Deriv kind) const {
  return synthesize(std::vector<const Spectrum*>{&spectrum}, kind).front();
}

Spectrum SphereBasis::synthesize_adjoint(const std::vector<double>& nodal, Deriv kind) const {
  if (nodal.size() != size()) throw std::invalid_argument("synthesize_adjoint: size mismatch");
  Eigen::MatrixXd re((mmax_ + 1) * n_theta_, 1), im((mmax_ + 1) * n_theta_, 1);
  forward_rows(nodal.data(), re, im, 0);
  Spectrum out = Spectrum::Zero(spectrum_size_);
  for (int m = 0; m <= mmax_; ++m) {
    const Eigen::MatrixXd& t = table(m, kind);
    const double s = m == 0 ? 1.0 : 2.0;
    const Eigen::VectorXd ar = s * (t.transpose() * re.middleRows(m * n_theta_, n_theta_));
    const Eigen::VectorXd ai = s * (t.transpose() * im.middleRows(m * n_theta_, n_theta_));
    for (int l = 0; l < ar.size(); ++l) {
      std::complex<double> a(ar[l], m == 0 ? 0.0 : ai[l]);
      switch (kind) {
        case Deriv::Phi:
        case Deriv::ThetaPhi: a *= std::complex<double>(0.0, -m); break;
        case Deriv::PhiPhi: a *= -static_cast<double>(m) * m; break;
        default: break;
      }
      out[offsets_[m] + l] = a;
    }
  }
  return out;
}

Eigen::Vector3d SphereBasis::e_r(int i, int j) const {
  return {sin_[i] * std::cos(phi_[j]), sin_[i] * std::sin(phi_[j]), cos_[i]};
}
Eigen::Vector3d SphereBasis::e_theta(int i, int j) const {
  return {cos_[i] * std::cos(phi_[j]), cos_[i] * std::sin(phi_[j]), -sin_[i]};
}
Eigen::Vector3d SphereBasis::e_phi(int, int j) const { return {-std::sin(phi_[j]), std::cos(phi_[j]), 0.0}; }

}  // namespace hflow
