#pragma once

// Brute-force reference for the QEF. The modes zeta_k = (xi_k, eta_k) live on
// a truncated Fock space and <vac|e^{Q_N}|vac> comes from a dense Hermitian
// eigendecomposition.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "qkl/errors.hpp"
#include "qkl/numlin.hpp"
#include "qkl/types.hpp"

namespace qkl {

inline constexpr int kMinFockDim = 8;
inline constexpr int kMaxOracleModes = 3;
inline constexpr double kOracleRefinementTolerance = 1e-6;

/// Default truncation per mode count: 40, 24, 14 for N = 1, 2, 3.
inline int default_fock_dim(int modes) {
  switch (modes) {
    case 1: return 40;
    case 2: return 24;
    default: return 14;
  }
}

struct TruncatedMode {
  int d = 0;
  ComplexMatrix q, p, xi, eta;
};

namespace detail {
inline TruncatedMode raw_mode(int d) {
  RealMatrix a = RealMatrix::Zero(d, d);
  for (int k = 1; k < d; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  const ComplexMatrix ac = a.cast<Complex>();
  const ComplexMatrix ad = ac.adjoint();
  TruncatedMode m;
  m.d = d;
  m.q = (ac + ad) / std::sqrt(2.0);
  m.p = (ac - ad) / (kI * std::sqrt(2.0));
  m.xi = std::sqrt(2.0) * m.q;
  m.eta = std::sqrt(2.0) * m.p;
  return m;
}
}  // namespace detail

inline TruncatedMode build_mode(int d) {
  if (d < kMinFockDim) {
    std::ostringstream os;
    os << "build_mode: Fock truncation d = " << d << " below " << kMinFockDim;
    throw std::invalid_argument(os.str());
  }
  TruncatedMode m = detail::raw_mode(d);
  const ComplexMatrix comm = m.q * m.p - m.p * m.q;
  const ComplexMatrix low = comm.topLeftCorner(d - 1, d - 1) -
                            kI * ComplexMatrix::Identity(d - 1, d - 1);
  if (low.norm() > 1e-12 * d) throw tolerance_error("build_mode: [q, p] != i on the low subspace");
  const ComplexMatrix xx = m.xi * m.xi, xe = m.xi * m.eta, ee = m.eta * m.eta;
  if (std::abs(xx(0, 0) - 1.0) > 1e-12 || std::abs(ee(0, 0) - 1.0) > 1e-12 ||
      std::abs(xe(0, 0) - kI) > 1e-12)
    throw tolerance_error("build_mode: vacuum moments do not match I + i jbar");
  return m;
}

namespace detail {

/// Kronecker product of per-mode factors, mode 0 slowest.
inline ComplexMatrix tensor(const std::vector<ComplexMatrix>& factors) {
  ComplexMatrix out = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
  return out;
}

/// Product op_a (on mode j) * op_b (on mode k) embedded in the N-mode space.
inline ComplexMatrix embedded_product(const ComplexMatrix& op_a, int j, const ComplexMatrix& op_b, int k,
                                      int modes, int d) {
  std::vector<ComplexMatrix> f(static_cast<std::size_t>(modes), ComplexMatrix::Identity(d, d));
  if (j == k) {
    f[static_cast<std::size_t>(j)] = op_a * op_b;
  } else {
    f[static_cast<std::size_t>(j)] = op_a;
    f[static_cast<std::size_t>(k)] = op_b;
  }
  return tensor(f);
}

inline void require_oracle_modes(int modes, const char* who) {
  if (modes < 1 || modes > kMaxOracleModes) {
    std::ostringstream os;
    os << who << ": N = " << modes << " outside [1, " << kMaxOracleModes << "]";
    throw std::invalid_argument(os.str());
  }
}

/// Q_N = sum_{j,k} zeta_j^T H_jk zeta_k with operators in written order.
inline ComplexMatrix assemble_Q(const RealMatrix& h, const TruncatedMode& mode, int modes) {
  const ComplexMatrix* ops[2] = {&mode.xi, &mode.eta};
  const Eigen::Index dim = static_cast<Eigen::Index>(std::pow(mode.d, modes));
  ComplexMatrix q = ComplexMatrix::Zero(dim, dim);
  for (int j = 0; j < modes; ++j)
    for (int k = 0; k < modes; ++k)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double c = h(2 * j + a, 2 * k + b);
          if (c != 0.0) q += c * embedded_product(*ops[a], j, *ops[b], k, modes, mode.d);
        }
  return q;
}

inline double vacuum_exp(const RealMatrix& h, int modes, int d) {
  const TruncatedMode mode = raw_mode(d);
  const ComplexMatrix q = assemble_Q(h, mode, modes);
  const double asym = (q - q.adjoint()).norm();
  if (asym > 1e-9 * std::max(1.0, q.norm())) {
    std::ostringstream os;
    os << "oracle_qef: assembled Q_N is not Hermitian (residual " << asym << ")";
    throw tolerance_error(os.str());
  }
  const HermitianEig eig = herm_eig(q, 1e-9);
  // vacuum is basis vector 0 under any mode ordering
  const ComplexVector v0 = eig.vectors.row(0).transpose();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) acc += std::norm(v0(i)) * std::exp(eig.values(i));
  return acc;
}

}  // namespace detail

struct OracleResult {
  double xi = 1.0;
  double refined_delta = 0.0;  // |Xi(d) - Xi(d - 8)|
  int d = 0;
};

/// <vac| e^{Q_N} |vac> for Q_N = sum_{j,k<N} zeta_j^T H_jk zeta_k with H given directly.
/// Throws tolerance_error when the d versus d - 8 refinement moves the value by
/// more than `tolerance` relative.
inline OracleResult oracle_qef(const RealMatrix& h, int modes, int d = 0,
                               double tolerance = kOracleRefinementTolerance) {
  detail::require_oracle_modes(modes, "oracle_qef");
  if (h.rows() != 2 * modes || h.cols() != 2 * modes)
    throw std::invalid_argument("oracle_qef: H must be 2N x 2N");
  if (d == 0) d = default_fock_dim(modes);
  if (d < kMinFockDim) throw std::invalid_argument("oracle_qef: Fock truncation d below 8");
  OracleResult out;
  out.d = d;
  if (h.isZero(0.0)) return out;
  out.xi = detail::vacuum_exp(h, modes, d);
  const double coarse = detail::vacuum_exp(h, modes, std::max(d - 8, 2));
  out.refined_delta = std::abs(out.xi - coarse);
  if (!(out.refined_delta <= tolerance * std::abs(out.xi))) {
    std::ostringstream os;
    os << "oracle_qef: Fock truncation d = " << d << " too small (refinement delta "
       << out.refined_delta << ")";
    throw tolerance_error(os.str());
  }
  return out;
}

/// Variant taking eigenvalues mu_k and Gram blocks G_jk (row-major, N*N entries).
inline OracleResult oracle_qef(const std::vector<double>& mu, const std::vector<Eigen::Matrix2d>& g,
                               int modes, int d = 0, double tolerance = kOracleRefinementTolerance) {
  detail::require_oracle_modes(modes, "oracle_qef");
  if (mu.size() < static_cast<std::size_t>(modes) || g.size() != static_cast<std::size_t>(modes * modes))
    throw std::invalid_argument("oracle_qef: need N eigenvalues and N*N Gram blocks");
  RealMatrix h(2 * modes, 2 * modes);
  for (int j = 0; j < modes; ++j)
    for (int k = 0; k < modes; ++k)
      h.block(2 * j, 2 * k, 2, 2) = std::sqrt(mu[j] * mu[k]) * g[static_cast<std::size_t>(j * modes + k)];
  return oracle_qef(h, modes, d, tolerance);
}

/// E(zeta_j zeta_k^T) over the vacuum product state, as a 2N x 2N matrix.
inline ComplexMatrix oracle_moments(int modes, int d = kMinFockDim) {
  detail::require_oracle_modes(modes, "oracle_moments");
  const TruncatedMode mode = build_mode(d);
  const ComplexMatrix* ops[2] = {&mode.xi, &mode.eta};
  ComplexMatrix out(2 * modes, 2 * modes);
  for (int j = 0; j < modes; ++j)
    for (int k = 0; k < modes; ++k)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          out(2 * j + a, 2 * k + b) = detail::embedded_product(*ops[a], j, *ops[b], k, modes, d)(0, 0);
  return out;
}

/// <vac| xi^4 |vac> on a single truncated mode.
inline Complex oracle_fourth_moment(int d) {
  const TruncatedMode mode = build_mode(d);
  const ComplexMatrix x2 = mode.xi * mode.xi;
  return (x2 * x2)(0, 0);
}

}  // namespace qkl
