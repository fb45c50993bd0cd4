#pragma once

// Sinusoidal eigenbasis of the Wiener covariance kernel min(s, t) on [0, T]
// and the second-order bookkeeping of the quantum KL coefficients w_k.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qkl/quadrature.hpp"
#include "qkl/types.hpp"

namespace qkl {

inline constexpr int kDefaultBasisOrder = 256;

class SinBasis {
 public:
  SinBasis(double horizon, int order = kDefaultBasisOrder) : T_(horizon), K_(order) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("SinBasis: horizon T must be positive and finite");
    if (order < 1) throw std::invalid_argument("SinBasis: truncation order must be >= 1");
  }

  double horizon() const { return T_; }
  int order() const { return K_; }

  /// omega_k = (pi / T)(k + 1/2)
  double omega(int k) const {
    check_index(k);
    return std::numbers::pi / T_ * (k + 0.5);
  }
  /// lambda_k = 1 / omega_k^2
  double lambda(int k) const {
    const double w = omega(k);
    return 1.0 / (w * w);
  }

  /// f_k(t) = sqrt(2/T) sin(omega_k t)
  double f(int k, double t) const {
    check_time(t);
    return std::sqrt(2.0 / T_) * std::sin(omega(k) * t);
  }
  /// g_k(t) = sqrt(2/T) cos(omega_k t)
  double g(int k, double t) const {
    check_time(t);
    return std::sqrt(2.0 / T_) * std::cos(omega(k) * t);
  }

  /// K-term Mercer approximation of min(s, t).
  double mercer_min(double s, double t) const {
    double acc = 0.0;
    for (int k = 0; k < K_; ++k) acc += lambda(k) * f(k, s) * f(k, t);
    return acc;
  }

  double lambda_partial_sum() const {
    double acc = 0.0;
    for (int k = 0; k < K_; ++k) acc += lambda(k);
    return acc;
  }

  /// Limit of the eigenvalue sum, T^2 / 2.
  double lambda_total() const { return 0.5 * T_ * T_; }

  /// Two-sided integral-comparison bounds for sum_{k >= K} lambda_k:
  /// T^2 / (pi^2 (K + 1/2)) <= tail <= T^2 / (pi^2 K).
  double lambda_tail_lower_bound() const {
    return T_ * T_ / (std::numbers::pi * std::numbers::pi * (K_ + 0.5));
  }
  double lambda_tail_upper_bound() const {
    return T_ * T_ / (std::numbers::pi * std::numbers::pi * K_);
  }

  /// Composite Gauss-Legendre rule on [0, T] giving at least 16 nodes per
  /// period of the highest-frequency product f_{K-1}^2 (order 16 panels).
  Quadrature quadrature() const {
    const double periods = 2.0 * omega(K_ - 1) * T_ / (2.0 * std::numbers::pi);
    const int panels = static_cast<int>(std::ceil(periods)) + 1;
    return composite_gauss_legendre(0.0, T_, panels, 16);
  }

 private:
  void check_index(int k) const {
    if (k < 0 || k >= K_) {
      std::ostringstream os;
      os << "SinBasis: index " << k << " outside [0, " << K_ << ")";
      throw std::invalid_argument(os.str());
    }
  }
  void check_time(double t) const {
    if (!(t >= -1e-12 * T_ && t <= T_ * (1.0 + 1e-12))) {
      std::ostringstream os;
      os << "SinBasis: time " << t << " outside [0, " << T_ << "]";
      throw std::invalid_argument(os.str());
    }
  }

  double T_;
  int K_;
};

/// Truncated two-point commutator of the expanded Wiener process:
/// [W(s), W(t)^T] ~ 2i mercer_min(s, t) J.
inline ComplexMatrix wiener_ccr(const SinBasis& basis, double s, double t, const RealMatrix& J) {
  return (2.0 * kI * basis.mercer_min(s, t)) * J.cast<Complex>();
}

/// E(w_j w_k^T) = delta_jk (I_m + iJ) in the vacuum field state.
inline ComplexMatrix coeff_covariance(int j, int k, const RealMatrix& J) {
  if (j < 0 || k < 0) throw std::invalid_argument("coeff_covariance: negative index");
  const Eigen::Index m = J.rows();
  if (j != k) return ComplexMatrix::Zero(m, m);
  return RealMatrix::Identity(m, m).cast<Complex>() + kI * J.cast<Complex>();
}

/// [w_j, w_k^T] = 2i delta_jk J.
inline ComplexMatrix coeff_ccr(int j, int k, const RealMatrix& J) {
  if (j < 0 || k < 0) throw std::invalid_argument("coeff_ccr: negative index");
  const Eigen::Index m = J.rows();
  if (j != k) return ComplexMatrix::Zero(m, m);
  return (2.0 * kI) * J.cast<Complex>();
}

/// Quadrature Gramians <f_j, f_k> and <g_j, g_k> for j, k < K.
struct BasisGramians {
  RealMatrix ff;
  RealMatrix gg;
};

inline BasisGramians basis_gramians(const SinBasis& basis, const Quadrature& quad) {
  const int K = basis.order();
  RealMatrix fs(quad.size(), K), gs(quad.size(), K);
  RealVector sw(quad.size());
  for (std::size_t i = 0; i < quad.size(); ++i) {
    sw(i) = std::sqrt(quad.weights[i]);
    for (int k = 0; k < K; ++k) {
      fs(i, k) = sw(i) * basis.f(k, quad.nodes[i]);
      gs(i, k) = sw(i) * basis.g(k, quad.nodes[i]);
    }
  }
  return {fs.transpose() * fs, gs.transpose() * gs};
}

/// omega_j omega_k * int int min(s, t) f_j(s) f_k(t) ds dt by nested quadrature
/// (inner integral split at the kink s = t). The exact value is delta_jk.
/// `grid` nodes on the outer axis; the two inner pieces share about `grid` nodes.
inline double ccr_double_integral(const SinBasis& basis, int j, int k, int grid = 400) {
  const double T = basis.horizon();
  const Quadrature outer = composite_gauss_legendre_nodes(0.0, T, grid);
  const GaussLegendreRule inner = gauss_legendre(16);
  const int inner_panels = std::max(1, grid / 32);  // two sides share `grid` nodes
  // int_a^b F(s) ds with inner_panels x 16 nodes
  auto integrate = [&](double a, double b, auto&& fn) {
    if (b <= a) return 0.0;
    const double h = (b - a) / inner_panels;
    double acc = 0.0;
    for (int p = 0; p < inner_panels; ++p) {
      const double left = a + p * h;
      for (std::size_t i = 0; i < inner.nodes.size(); ++i) {
        const double s = left + 0.5 * h * (inner.nodes[i] + 1.0);
        acc += 0.5 * h * inner.weights[i] * fn(s);
      }
    }
    return acc;
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const double t = outer.nodes[i];
    const double below = integrate(0.0, t, [&](double s) { return s * basis.f(j, s); });
    const double above = integrate(t, T, [&](double s) { return basis.f(j, s); });
    acc += outer.weights[i] * basis.f(k, t) * (below + t * above);
  }
  return basis.omega(j) * basis.omega(k) * acc;
}

/// ||f||^2 for f = sum_k g_k u_k^T (u given as a K' x m matrix, K' <= K), by quadrature.
/// Orthonormality of {g_k} makes this equal to sum_k |u_k|^2.
inline double qcf_norm_sq(const SinBasis& basis, const RealMatrix& u, const Quadrature& quad) {
  if (u.rows() > basis.order()) throw std::invalid_argument("qcf_norm_sq: too many coefficients");
  double acc = 0.0;
  for (std::size_t i = 0; i < quad.size(); ++i) {
    RealVector ft = RealVector::Zero(u.cols());
    for (Eigen::Index k = 0; k < u.rows(); ++k)
      ft += basis.g(static_cast<int>(k), quad.nodes[i]) * u.row(k).transpose();
    acc += quad.weights[i] * ft.squaredNorm();
  }
  return acc;
}

}  // namespace qkl
