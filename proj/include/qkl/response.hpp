#pragma once

// Sinusoidal response of the system variables to the expanded Wiener process.
//
// Operator-valued vectors are carried as GeneratorMaps: real coefficient
// blocks over the stacked generators (X0, w_0, ..., w_{K-1}). Commutators and
// vacuum/invariant covariances of such vectors follow from the second-order
// forms of the generators alone (BilinearForms).

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "qkl/errors.hpp"
#include "qkl/numlin.hpp"
#include "qkl/oqho.hpp"
#include "qkl/quadrature.hpp"
#include "qkl/sinbasis.hpp"
#include "qkl/types.hpp"

namespace qkl {

/// coeff_X0 * X0 + sum_k coeff_w[k] * w_k, with all K blocks of coeff_w packed
/// side by side in an n x (m K) matrix.
class GeneratorMap {
 public:
  GeneratorMap() = default;
  GeneratorMap(Eigen::Index n, Eigen::Index m, int modes)
      : x0_(RealMatrix::Zero(n, n)), w_(RealMatrix::Zero(n, m * modes)), m_(m), modes_(modes) {}

  Eigen::Index n() const { return x0_.rows(); }
  Eigen::Index m() const { return m_; }
  int modes() const { return modes_; }

  RealMatrix& x0() { return x0_; }
  const RealMatrix& x0() const { return x0_; }
  auto w(int k) { return w_.middleCols(k * m_, m_); }
  auto w(int k) const { return w_.middleCols(k * m_, m_); }
  const RealMatrix& w_all() const { return w_; }

  GeneratorMap& operator+=(const GeneratorMap& other) {
    check_compatible(other);
    x0_ += other.x0_;
    w_ += other.w_;
    return *this;
  }
  /// this += c * other
  GeneratorMap& axpy(double c, const GeneratorMap& other) {
    check_compatible(other);
    x0_ += c * other.x0_;
    w_ += c * other.w_;
    return *this;
  }
  /// Left multiplication by an n' x n matrix.
  friend GeneratorMap operator*(const RealMatrix& lhs, const GeneratorMap& map) {
    GeneratorMap out;
    out.x0_ = lhs * map.x0_;
    out.w_ = lhs * map.w_;
    out.m_ = map.m_;
    out.modes_ = map.modes_;
    return out;
  }

 private:
  void check_compatible(const GeneratorMap& other) const {
    if (other.x0_.rows() != x0_.rows() || other.w_.cols() != w_.cols())
      throw std::invalid_argument("GeneratorMap: incompatible shapes");
  }

  RealMatrix x0_;
  RealMatrix w_;
  Eigen::Index m_ = 0;
  int modes_ = 0;
};

/// Second-order forms of the generators under the product state rho0:
/// [X0, X0^T] = 2i Theta, [w_k, w_k^T] = 2i J, E X0 X0^T = V, E w_k w_k^T = I + iJ,
/// and every cross term between distinct generators vanishes.
struct BilinearForms {
  RealMatrix Theta;
  RealMatrix J;
  ComplexMatrix V;

  /// [a, b^T] for operator vectors a, b
  ComplexMatrix ccr(const GeneratorMap& a, const GeneratorMap& b) const {
    RealMatrix acc = a.x0() * Theta * b.x0().transpose();
    for (int k = 0; k < a.modes(); ++k) acc += a.w(k) * J * b.w(k).transpose();
    return (2.0 * kI) * acc.cast<Complex>();
  }

  /// E(a b^T)
  ComplexMatrix covariance(const GeneratorMap& a, const GeneratorMap& b) const {
    RealMatrix im = RealMatrix::Zero(a.n(), b.n());
    for (int k = 0; k < a.modes(); ++k) im += a.w(k) * J * b.w(k).transpose();
    const RealMatrix re = a.w_all() * b.w_all().transpose();
    const ComplexMatrix x0 = a.x0().cast<Complex>() * V * b.x0().transpose().cast<Complex>();
    ComplexMatrix out = x0;
    out.real() += re;
    out.imag() += im;
    return out;
  }
};

inline BilinearForms bilinear_forms(const CovarianceKernel& kernel) {
  return {kernel.model.Theta, kernel.model.J, kernel.V};
}

/// (omega_k^2 I + A^2)^{-1}
inline RealMatrix mho(const OqhoModel& model, const SinBasis& basis, int k) {
  const double w = basis.omega(k);
  RealMatrix mat = model.A * model.A;
  mat.diagonal().array() += w * w;
  const Eigen::PartialPivLU<RealMatrix> lu(mat);
  if (!(lu.rcond() > 1e-14)) {
    std::ostringstream os;
    os << "mho: omega_" << k << "^2 I + A^2 is singular (is A Hurwitz?)";
    throw tolerance_error(os.str());
  }
  return lu.inverse();
}

namespace detail {
inline RealMatrix fourier_A_with(const OqhoModel& model, const SinBasis& basis, int k,
                                 const RealMatrix& e_ta) {
  const double w = basis.omega(k);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return std::sqrt(2.0 / basis.horizon()) * model.A * mho(model, basis, k) *
         (sign * e_ta - model.A / w);
}
}  // namespace detail

/// A_k = sqrt(2/T) A mho_k ((-1)^k e^{TA} - A / omega_k), the sine coefficients of e^{tA} - I.
inline RealMatrix fourier_A(const OqhoModel& model, const SinBasis& basis, int k) {
  require_hurwitz(model.A, "fourier_A");
  return detail::fourier_A_with(model, basis, k, expm(model.A, basis.horizon()));
}

/// Precomputed mho_k and A_k for k < K.
struct FourierTables {
  SinBasis basis;
  RealMatrix e_TA;
  std::vector<RealMatrix> mho;
  std::vector<RealMatrix> A;
};

inline FourierTables fourier_tables(const OqhoModel& model, const SinBasis& basis) {
  require_hurwitz(model.A, "fourier_tables");
  FourierTables t{basis, expm(model.A, basis.horizon()), {}, {}};
  t.mho.reserve(basis.order());
  t.A.reserve(basis.order());
  for (int k = 0; k < basis.order(); ++k) {
    t.mho.push_back(mho(model, basis, k));
    t.A.push_back(detail::fourier_A_with(model, basis, k, t.e_TA));
  }
  return t;
}

/// Truncated sine expansion I + sum_{k<K} f_k(t) A_k of e^{tA}.
inline RealMatrix expm_fourier(const FourierTables& tables, double t) {
  const Eigen::Index n = tables.e_TA.rows();
  RealMatrix s = RealMatrix::Identity(n, n);
  for (int k = 0; k < tables.basis.order(); ++k) s += tables.basis.f(k, t) * tables.A[k];
  return s;
}

inline RealMatrix expm_fourier(const OqhoModel& model, const SinBasis& basis, double t) {
  return expm_fourier(fourier_tables(model, basis), t);
}

/// sqrt(int_0^T ||e^{tA} - expm_fourier(t)||_F^2 dt), by composite Gauss-Legendre
/// quadrature fine enough for the highest retained frequency.
inline double expm_fourier_l2_error(const OqhoModel& model, const FourierTables& tables) {
  const Quadrature quad = SinBasis(tables.basis.horizon(), tables.basis.order() + 8).quadrature();
  const double err2 = quad.integrate([&](double t) {
    return (expm(model.A, t) - expm_fourier(tables, t)).squaredNorm();
  });
  return std::sqrt(err2);
}

/// sum_{K <= k < k_stop} ||A_k||_F^2, the Parseval tail of the truncated expansion.
inline double fourier_tail_sq(const OqhoModel& model, double horizon, int K, int k_stop) {
  if (k_stop <= K) return 0.0;
  require_hurwitz(model.A, "fourier_tail_sq");
  const SinBasis long_basis(horizon, k_stop);
  const RealMatrix e_ta = expm(model.A, horizon);
  double acc = 0.0;
  for (int k = K; k < k_stop; ++k)
    acc += detail::fourier_A_with(model, long_basis, k, e_ta).squaredNorm();
  return acc;
}

/// Certified bound on sqrt(2/T) sum_{k >= K} ||A mho_k B||_F: explicit terms up
/// to a cutoff, then ||mho_k||_2 <= 1 / (omega_k^2 - ||A||_2^2) and an integral bound.
inline double xi_tail_bound(const OqhoModel& model, double horizon, int K) {
  const double a2 = Eigen::JacobiSVD<RealMatrix>(model.A).singularValues()(0);
  const double bnorm = model.B.norm();
  const double c = std::numbers::pi / horizon;
  int k_cut = K;
  while (c * (k_cut - 0.5) <= 2.0 * a2) ++k_cut;
  k_cut += 2048;
  const SinBasis long_basis(horizon, k_cut);
  double acc = 0.0;
  for (int k = K; k < k_cut; ++k)
    acc += (model.A * mho(model, long_basis, k) * model.B).norm();
  // sum_{k >= k_cut} 1 / (omega_k^2 - a^2) <= int_{k_cut - 1}^inf dx / (c^2 (x + 1/2)^2 - a^2)
  const double y0 = c * (k_cut - 0.5);
  const double integral = a2 > 0.0 ? std::log((y0 + a2) / (y0 - a2)) / (2.0 * a2 * c) : 1.0 / (c * y0);
  acc += a2 * bnorm * integral;
  return std::sqrt(2.0 / horizon) * acc;
}

/// Coefficients of the sinusoidal representation
/// X(t) = xi + sum_k (f_k(t) alpha_k + g_k(t) beta_k), truncated at K modes.
struct RepresentationCoefficients {
  SinBasis basis;
  GeneratorMap xi;
  std::vector<GeneratorMap> alphas;
  std::vector<GeneratorMap> betas;
  double xi_tail_bound = 0.0;
};

inline RepresentationCoefficients representation_coeffs(const OqhoModel& model, const SinBasis& basis) {
  const FourierTables tables = fourier_tables(model, basis);
  const int K = basis.order();
  const double scale = std::sqrt(2.0 / basis.horizon());
  RepresentationCoefficients out{basis, GeneratorMap(model.n, model.m, K), {}, {}, 0.0};
  out.xi.x0().setIdentity();
  std::vector<RealMatrix> amb(K);  // A mho_k B
  for (int k = 0; k < K; ++k) {
    amb[k] = model.A * tables.mho[k] * model.B;
    out.xi.w(k) = scale * amb[k];
  }
  out.alphas.reserve(K);
  out.betas.reserve(K);
  for (int k = 0; k < K; ++k) {
    GeneratorMap alpha = tables.A[k] * out.xi;
    alpha.w(k) += basis.omega(k) * tables.mho[k] * model.B;
    GeneratorMap beta(model.n, model.m, K);
    beta.w(k) = -amb[k];
    out.alphas.push_back(std::move(alpha));
    out.betas.push_back(std::move(beta));
  }
  out.xi_tail_bound = xi_tail_bound(model, basis.horizon(), K);
  return out;
}

/// X(t) = xi + sum_k (f_k(t) alpha_k + g_k(t) beta_k) as a GeneratorMap.
inline GeneratorMap representation_map(const RepresentationCoefficients& c, double t) {
  GeneratorMap x = c.xi;
  for (int k = 0; k < c.basis.order(); ++k) {
    x.axpy(c.basis.f(k, t), c.alphas[k]);
    x.axpy(c.basis.g(k, t), c.betas[k]);
  }
  return x;
}

/// Closed form [alpha_j, beta_k^T] =
/// -2i (sqrt(2/T) A A_j mho_k + delta_jk omega_j mho_j) B J B^T mho_k^T A^T.
inline ComplexMatrix alpha_beta_ccr(const OqhoModel& model, const SinBasis& basis, int j, int k) {
  const RealMatrix e_ta = expm(model.A, basis.horizon());
  const RealMatrix aj = detail::fourier_A_with(model, basis, j, e_ta);
  const RealMatrix mk = mho(model, basis, k);
  RealMatrix left = std::sqrt(2.0 / basis.horizon()) * model.A * aj * mk;
  if (j == k) left += basis.omega(j) * mho(model, basis, j);
  const RealMatrix out =
      -2.0 * left * model.B * model.J * model.B.transpose() * mk.transpose() * model.A.transpose();
  return kI * out.cast<Complex>();
}

/// E(X(s) X(t)^T) of the truncated representation with X0 in the invariant state.
inline ComplexMatrix representation_covariance(const RepresentationCoefficients& c,
                                               const BilinearForms& forms, double s, double t) {
  return forms.covariance(representation_map(c, s), representation_map(c, t));
}

inline ComplexMatrix representation_covariance(const CovarianceKernel& kernel,
                                               const SinBasis& basis, double s, double t) {
  return representation_covariance(representation_coeffs(kernel.model, basis), bilinear_forms(kernel),
                                   s, t);
}

}  // namespace qkl
