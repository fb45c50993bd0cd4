#pragma once

// Quadratic-exponential functional Xi_N = E exp(Q_N) of the truncated QKL
// expansion, evaluated through Williamson's symplectic diagonalization of H_N
// and a 3N x 3N determinant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkl/errors.hpp"
#include "qkl/kernel_eig.hpp"
#include "qkl/numlin.hpp"
#include "qkl/oqho.hpp"
#include "qkl/types.hpp"

namespace qkl {

inline constexpr double kFeasibilityMargin = 1e-8;
inline constexpr double kAutoModeMass = 0.999;

namespace detail {
inline void require_symmetric_weight(const RealMatrix& pi, Eigen::Index n, const char* who) {
  if (pi.rows() != n || pi.cols() != n) throw std::invalid_argument(std::string(who) + ": Pi must be n x n");
  if ((pi - pi.transpose()).norm() > 1e-12 * std::max(1.0, pi.norm()))
    throw std::invalid_argument(std::string(who) + ": Pi is not symmetric");
}

// Columns (phi_k, -psi_k) for k < N, stacked over grid nodes, with sqrt of quadrature weights.
inline RealMatrix mode_columns(const KernelEigDecomposition& d, int N) {
  const Eigen::Index g = static_cast<Eigen::Index>(d.grid.size());
  RealMatrix c(g * d.n, 2 * N);
  for (int k = 0; k < N; ++k) {
    for (Eigen::Index i = 0; i < g; ++i) {
      const double sw = std::sqrt(d.grid.weights[static_cast<std::size_t>(i)]);
      const ComplexVector hk = d.at(k, static_cast<std::size_t>(i));
      c.block(i * d.n, 2 * k, d.n, 1) = sw * hk.real();
      c.block(i * d.n, 2 * k + 1, d.n, 1) = -sw * hk.imag();
    }
  }
  return c;
}

inline RealMatrix weighted_gram(const KernelEigDecomposition& d, const RealMatrix& pi, int N) {
  const RealMatrix c = mode_columns(d, N);
  const Eigen::Index g = static_cast<Eigen::Index>(d.grid.size());
  RealMatrix pc(c.rows(), c.cols());
  for (Eigen::Index i = 0; i < g; ++i) pc.middleRows(i * d.n, d.n) = pi * c.middleRows(i * d.n, d.n);
  return c.transpose() * pc;
}
}  // namespace detail

/// G_jk = [[<phi_j, Pi phi_k>, -<phi_j, Pi psi_k>], [-<psi_j, Pi phi_k>, <psi_j, Pi psi_k>]]
/// by quadrature on the Nystrom grid.
inline Eigen::Matrix2d gram_G(const KernelEigDecomposition& d, const RealMatrix& pi, int j, int k) {
  detail::require_symmetric_weight(pi, d.n, "gram_G");
  if (j < 0 || k < 0 || j >= d.modes() || k >= d.modes())
    throw std::invalid_argument("gram_G: mode index outside computed modes");
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < d.grid.size(); ++i) {
    const double w = d.grid.weights[i];
    const RealVector pj = d.phi(j, i), qj = d.psi(j, i);
    const RealVector pk = d.phi(k, i), qk = d.psi(k, i);
    g(0, 0) += w * pj.dot(pi * pk);
    g(0, 1) -= w * pj.dot(pi * qk);
    g(1, 0) -= w * qj.dot(pi * pk);
    g(1, 1) += w * qj.dot(pi * qk);
  }
  return g;
}

/// H_N with blocks sqrt(mu_j mu_k) G_jk; symmetric and checked PSD.
inline RealMatrix assemble_H(const KernelEigDecomposition& d, const RealMatrix& pi, int N) {
  detail::require_symmetric_weight(pi, d.n, "assemble_H");
  if (N < 1 || N > d.modes()) throw std::invalid_argument("assemble_H: N outside computed modes");
  RealMatrix h = detail::weighted_gram(d, pi, N);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k) h.block(2 * j, 2 * k, 2, 2) *= std::sqrt(d.mu(j) * d.mu(k));
  h = 0.5 * (h + h.transpose());
  const double scale = h.norm();
  if (scale > 0.0) {
    const double lmin = sym_eig(h).first.minCoeff();
    if (lmin < -1e-10 * scale) {
      std::ostringstream os;
      os << "assemble_H: H is not positive semi-definite (smallest eigenvalue " << lmin << ")";
      throw tolerance_error(os.str());
    }
  }
  return h;
}

/// Symmetric matrix inheriting the upper triangle (with diagonal) of D.
template <typename Derived>
auto diamond(const Eigen::MatrixBase<Derived>& dm) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = dm;
  require_square(out, "diamond");
  for (Eigen::Index j = 0; j < out.rows(); ++j)
    for (Eigen::Index k = 0; k < j; ++k) out(j, k) = out(k, j);
  return out;
}

struct Feasibility {
  bool feasible = false;
  double radius = std::numeric_limits<double>::infinity();
  std::string reason;
  std::optional<WilliamsonFactorization> williamson;
};

/// a_k = tanh(2 sigma_k) / 2, b_k = sinh(4 sigma_k) / 2
inline std::pair<RealVector, RealVector> symplectic_factors(const RealVector& sigmas) {
  RealVector a = (2.0 * sigmas.array()).tanh() * 0.5;
  RealVector b = (4.0 * sigmas.array()).sinh() * 0.5;
  return {a, b};
}

/// Spectral radius of (U^T U)^{-1} blockdiag(2 a_k, b_k); feasible when < 1 - margin.
inline Feasibility qef_feasible(const RealMatrix& h) {
  Feasibility out;
  try {
    out.williamson = williamson(h);
  } catch (const not_positive_definite_error& e) {
    out.reason = e.what();
    return out;
  }
  const WilliamsonFactorization& w = *out.williamson;
  const auto [a, b] = symplectic_factors(w.sigmas);
  const Eigen::Index modes = w.sigmas.size();
  RealVector diag(2 * modes);
  for (Eigen::Index k = 0; k < modes; ++k) {
    diag(2 * k) = 2.0 * a(k);
    diag(2 * k + 1) = b(k);
  }
  const RealMatrix gram_inv = (w.U.transpose() * w.U).inverse();
  out.radius = spectral_radius(gram_inv * diag.asDiagonal());
  out.feasible = out.radius < 1.0 - kFeasibilityMargin;
  if (!out.feasible) {
    std::ostringstream os;
    os << "spectral radius " << out.radius << " >= 1 - " << kFeasibilityMargin;
    out.reason = os.str();
  }
  return out;
}

struct QefValue {
  double xi = 1.0;
  Complex determinant{1.0, 0.0};
  Feasibility feasibility;
};

/// Xi_N = 1 / sqrt(det(I_3N - (Phi_N C_N Phi_N^T)^diamond Psi_N)),
/// C_N = (U^T U)^{-1} + i J_N.
inline QefValue qef_evaluate(const RealMatrix& h) {
  require_square(h, "qef_value");
  QefValue out;
  if (h.isZero(0.0)) {
    out.feasibility.feasible = true;
    out.feasibility.radius = 0.0;
    return out;
  }
  out.feasibility = qef_feasible(h);
  if (!out.feasibility.williamson)
    throw not_positive_definite_error("qef_value: " + out.feasibility.reason);
  if (!out.feasibility.feasible)
    throw infeasible_error("qef_value: infeasible, " + out.feasibility.reason, out.feasibility.radius);

  const WilliamsonFactorization& w = *out.feasibility.williamson;
  const Eigen::Index modes = w.sigmas.size();
  const auto [a, b] = symplectic_factors(w.sigmas);
  ComplexMatrix c = (w.U.transpose() * w.U).inverse().cast<Complex>();
  c += kI * symplectic_J(modes).cast<Complex>();

  RealMatrix phi_block(3, 2);
  phi_block << 1, 0, 0, 1, 1, 0;
  const ComplexMatrix phi = kron(RealMatrix::Identity(modes, modes), phi_block).cast<Complex>();
  RealVector psi(3 * modes);
  for (Eigen::Index k = 0; k < modes; ++k) {
    psi(3 * k) = a(k);
    psi(3 * k + 1) = b(k);
    psi(3 * k + 2) = a(k);
  }
  const ComplexMatrix dm = diamond(phi * c * phi.transpose());
  ComplexMatrix lhs = -dm * psi.cast<Complex>().asDiagonal();
  lhs.diagonal().array() += 1.0;
  out.determinant = Eigen::PartialPivLU<ComplexMatrix>(lhs).determinant();
  const double re = out.determinant.real();
  if (!(re > 0.0) || std::abs(out.determinant.imag()) > 1e-9 * std::abs(re)) {
    std::ostringstream os;
    os << "qef_value: determinant " << out.determinant.real() << " + " << out.determinant.imag()
       << "i is not positive real";
    throw tolerance_error(os.str());
  }
  out.xi = 1.0 / std::sqrt(re);
  return out;
}

inline double qef_value(const RealMatrix& h) { return qef_evaluate(h).xi; }

/// Smallest N whose leading eigenvalues carry `fraction` of the computed spectral mass.
inline int auto_modes(const KernelEigDecomposition& d, double fraction = kAutoModeMass) {
  const double total = d.mu.sum();
  if (!(total > 0.0)) return 1;
  double acc = 0.0;
  for (int k = 0; k < d.modes(); ++k) {
    acc += d.mu(k);
    if (acc >= fraction * total) return k + 1;
  }
  return d.modes();
}

struct QefProblem {
  int N = 0;
  RealMatrix Pi;
  RealMatrix H;                 // over the kept modes
  std::vector<int> kept_modes;
  std::vector<int> dropped_modes;
  bool feasible = false;
  double radius = 0.0;
  std::string reason;
  RealVector sigmas;
  double xi = std::numeric_limits<double>::quiet_NaN();
  double tail_mass = 0.0;       // sum_{k >= N} mu_k
  std::size_t grid_size = 0;
};

/// gram_G -> assemble_H -> qef_feasible -> qef_value. A near-singular H_N is
/// regularized by dropping modes with mu_k ||G_kk|| below 1e-12 of the largest.
/// Infeasible problems are returned with feasible = false and no Xi.
inline QefProblem qef_pipeline(const CovarianceKernel& kernel, const KernelEigDecomposition& d,
                               const RealMatrix& pi, std::optional<int> modes = std::nullopt) {
  detail::require_symmetric_weight(pi, kernel.model.n, "qef_pipeline");
  if (sym_eig(pi).first.minCoeff() < -1e-12 * std::max(1.0, pi.norm()))
    throw std::invalid_argument("qef_pipeline: Pi is not positive semi-definite");
  QefProblem p;
  p.N = modes ? *modes : auto_modes(d);
  p.Pi = pi;
  p.grid_size = d.grid.size();
  p.tail_mass = ms_tail(d, p.N);
  const RealMatrix full = assemble_H(d, pi, p.N);

  const double hnorm = full.norm();
  bool singular = hnorm == 0.0;
  if (!singular) singular = sym_eig(full).first.minCoeff() < 1e-12 * hnorm;
  if (singular) {
    double best = 0.0;
    std::vector<double> score(p.N);
    for (int k = 0; k < p.N; ++k) {
      score[k] = full.block(2 * k, 2 * k, 2, 2).norm();  // = mu_k ||G_kk||
      best = std::max(best, score[k]);
    }
    for (int k = 0; k < p.N; ++k) (score[k] > 1e-12 * best ? p.kept_modes : p.dropped_modes).push_back(k);
  } else {
    for (int k = 0; k < p.N; ++k) p.kept_modes.push_back(k);
  }

  const Eigen::Index kept = static_cast<Eigen::Index>(p.kept_modes.size());
  p.H.resize(2 * kept, 2 * kept);
  for (Eigen::Index j = 0; j < kept; ++j)
    for (Eigen::Index k = 0; k < kept; ++k)
      p.H.block(2 * j, 2 * k, 2, 2) = full.block(2 * p.kept_modes[j], 2 * p.kept_modes[k], 2, 2);

  if (kept == 0) {
    p.feasible = true;
    p.xi = 1.0;
    return p;
  }
  const Feasibility f = qef_feasible(p.H);
  p.radius = f.radius;
  p.feasible = f.feasible;
  p.reason = f.reason;
  if (f.williamson) p.sigmas = f.williamson->sigmas;
  if (!f.williamson) throw not_positive_definite_error("qef_pipeline: H_N singular after regularization: " + f.reason);
  if (p.feasible) p.xi = qef_value(p.H);
  return p;
}

/// E Q = T Tr(Pi Sigma) in the invariant state.
inline double mean_q(const CovarianceKernel& kernel, const RealMatrix& pi, double horizon) {
  detail::require_symmetric_weight(pi, kernel.model.n, "mean_q");
  return horizon * (pi * kernel.Sigma).trace();
}

}  // namespace qkl
