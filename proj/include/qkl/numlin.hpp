#pragma once

// Dense linear algebra kernels shared by every other module.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "qkl/errors.hpp"
#include "qkl/types.hpp"

namespace qkl {

/// Default Hurwitz margin: every eigenvalue must satisfy Re(lambda) < -kHurwitzMargin.
inline constexpr double kHurwitzMargin = 1e-9;

/// e^{tM}. Scaling and squaring with a diagonal Pade approximant whose degree
/// (3, 5, 7, 9 or 13) is picked from the 1-norm of tM, as in Higham (2005).
inline RealMatrix expm(const RealMatrix& m, double t = 1.0) {
  require_square(m, "expm");
  require_finite(m, "expm");
  const RealMatrix scaled = t * m;
  return scaled.exp();
}

inline Eigen::VectorXcd eigenvalues(const RealMatrix& m) {
  require_square(m, "eigenvalues");
  Eigen::EigenSolver<RealMatrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw tolerance_error("eigenvalues: QR iteration failed");
  return es.eigenvalues();
}

inline Eigen::VectorXcd eigenvalues(const ComplexMatrix& m) {
  require_square(m, "eigenvalues");
  Eigen::ComplexEigenSolver<ComplexMatrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw tolerance_error("eigenvalues: QR iteration failed");
  return es.eigenvalues();
}

/// max |lambda| over the spectrum of a square real or complex matrix.
template <typename Derived>
double spectral_radius(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense = m;
  return eigenvalues(dense).cwiseAbs().maxCoeff();
}

inline bool is_hurwitz(const RealMatrix& a, double margin = kHurwitzMargin) {
  return eigenvalues(a).real().maxCoeff() < -margin;
}

/// Throws not_hurwitz_error naming the first offending eigenvalue.
inline void require_hurwitz(const RealMatrix& a, const char* who,
                            double margin = kHurwitzMargin) {
  const Eigen::VectorXcd ev = eigenvalues(a);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i).real() >= -margin) {
      std::ostringstream os;
      os.precision(12);
      os << who << ": matrix is not Hurwitz, eigenvalue " << ev(i).real()
         << (ev(i).imag() < 0 ? " - " : " + ") << std::abs(ev(i).imag())
         << "i has real part >= " << -margin;
      throw not_hurwitz_error(os.str());
    }
  }
}

namespace detail {

// Solves A X + X A^T + Q = 0 for complex Q using the complex Schur form
// A = U T U^*; Y = U^* X U satisfies T Y + Y T^* = -U^* Q U, which is solved
// column by column from the last one since T^* is lower triangular.
inline ComplexMatrix bartels_stewart(const Eigen::ComplexSchur<ComplexMatrix>& schur,
                                     const ComplexMatrix& q) {
  const ComplexMatrix& t = schur.matrixT();
  const ComplexMatrix& u = schur.matrixU();
  const Eigen::Index n = t.rows();
  const ComplexMatrix c = u.adjoint() * q * u;
  ComplexMatrix y = ComplexMatrix::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    ComplexVector rhs = -c.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(t(j, k)) * y.col(k);
    ComplexMatrix shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return u * y * u.adjoint();
}

inline void check_lyap_residual(const RealMatrix& a, const RealMatrix& x, const RealMatrix& q,
                                double tol) {
  const double res = (a * x + x * a.transpose() + q).norm();
  const double scale = q.norm();
  if (res > tol * scale) {
    std::ostringstream os;
    os << "lyap: residual " << res << " exceeds " << tol << " * " << scale;
    throw tolerance_error(os.str());
  }
}

}  // namespace detail

/// Solves the algebraic Lyapunov equation A X + X A^T + Q = 0 for Hurwitz A.
inline RealMatrix lyap(const RealMatrix& a, const RealMatrix& q, double tol = 1e-10) {
  require_square(a, "lyap");
  require_square(q, "lyap");
  if (q.rows() != a.rows()) throw std::invalid_argument("lyap: A and Q differ in order");
  require_hurwitz(a, "lyap");
  const Eigen::ComplexSchur<ComplexMatrix> schur(a.cast<Complex>());
  RealMatrix x = detail::bartels_stewart(schur, q.cast<Complex>()).real();
  detail::check_lyap_residual(a, x, q, tol);
  return x;
}

/// Complex right-hand side: real and imaginary parts are solved separately.
inline ComplexMatrix lyap(const RealMatrix& a, const ComplexMatrix& q, double tol = 1e-10) {
  const RealMatrix re = lyap(a, RealMatrix(q.real()), tol);
  const RealMatrix im = lyap(a, RealMatrix(q.imag()), tol);
  ComplexMatrix x(re.rows(), re.cols());
  x.real() = re;
  x.imag() = im;
  return x;
}

struct HermitianEig {
  RealVector values;      // descending
  ComplexMatrix vectors;  // columns, unitary
};

/// M = V diag(lambda) V^*, eigenvalues sorted descending.
inline HermitianEig herm_eig(const ComplexMatrix& m, double tol = 1e-10) {
  require_square(m, "herm_eig");
  require_finite(m, "herm_eig");
  const double asym = (m - m.adjoint()).norm();
  if (asym > tol * std::max(1.0, m.norm())) {
    std::ostringstream os;
    os << "herm_eig: matrix is not Hermitian (||M - M^*||_F = " << asym << ")";
    throw std::invalid_argument(os.str());
  }
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
  if (es.info() != Eigen::Success) throw tolerance_error("herm_eig: eigensolver failed");
  const Eigen::Index n = m.rows();
  HermitianEig out{RealVector(n), ComplexMatrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

/// Real symmetric eigendecomposition, descending.
inline std::pair<RealVector, RealMatrix> sym_eig(const RealMatrix& m) {
  require_square(m, "sym_eig");
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw tolerance_error("sym_eig: eigensolver failed");
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

inline bool is_positive_definite(const RealMatrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0) return false;
  Eigen::LLT<RealMatrix> llt(h);
  return llt.info() == Eigen::Success;
}

struct WilliamsonFactorization {
  RealMatrix U;        // symplectic: U J_N U^T = J_N
  RealVector sigmas;   // symplectic eigenvalues, descending
  double symplectic_residual = 0.0;  // ||U J_N U^T - J_N||_F
  double diagonal_residual = 0.0;    // ||U^T H U - S_N (x) I_2||_F
};

/// Williamson symplectic diagonalization U^T H U = diag(sigma) (x) I_2 of a
/// symmetric positive definite H of order 2N, with mode interleaving J_N = I_N (x) jbar.
///
/// With K = H^{1/2} J_N H^{1/2} (real skew), the Hermitian matrix iK has
/// eigenpairs (+sigma_k, v_k), (-sigma_k, conj v_k). Writing v_k = x_k + i y_k,
/// the columns sqrt(2) (y_k, x_k) form an orthogonal O with O^T K O =
/// blockdiag(sigma_k jbar); then U = H^{-1/2} O (diag(sqrt sigma) (x) I_2).
/// Degenerate sigma need no special care: any orthonormal basis of the
/// +sigma eigenspace is orthogonal to its conjugate.
inline WilliamsonFactorization williamson(const RealMatrix& h) {
  require_square(h, "williamson");
  require_finite(h, "williamson");
  if (h.rows() % 2 != 0) throw std::invalid_argument("williamson: order must be even");
  const double hnorm = h.norm();
  if ((h - h.transpose()).norm() > 1e-12 * std::max(1.0, hnorm))
    throw not_positive_definite_error("williamson: matrix is not symmetric");
  const RealMatrix hs = 0.5 * (h + h.transpose());
  if (!is_positive_definite(hs))
    throw not_positive_definite_error("williamson: matrix is not positive definite");

  const Eigen::Index n2 = hs.rows();
  const Eigen::Index modes = n2 / 2;
  Eigen::SelfAdjointEigenSolver<RealMatrix> hes(hs);
  const RealVector& lam = hes.eigenvalues();
  if (lam.minCoeff() <= 0.0)
    throw not_positive_definite_error("williamson: matrix is not positive definite");
  const RealMatrix& q = hes.eigenvectors();
  const RealMatrix h_half = q * lam.cwiseSqrt().asDiagonal() * q.transpose();
  const RealMatrix h_mhalf = q * lam.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();

  const RealMatrix jn = symplectic_J(modes);
  RealMatrix k = h_half * jn * h_half;
  k = 0.5 * (k - k.transpose());
  const ComplexMatrix ik = kI * k.cast<Complex>();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> kes(0.5 * (ik + ik.adjoint()));
  if (kes.info() != Eigen::Success) throw tolerance_error("williamson: eigensolver failed");

  WilliamsonFactorization out;
  out.sigmas.resize(modes);
  RealMatrix o(n2, n2);
  RealVector root(n2);
  for (Eigen::Index kk = 0; kk < modes; ++kk) {
    const Eigen::Index col = n2 - 1 - kk;  // eigenvalues ascend; positive half is at the end
    const double sigma = kes.eigenvalues()(col);
    const ComplexVector v = kes.eigenvectors().col(col);
    out.sigmas(kk) = sigma;
    o.col(2 * kk) = std::sqrt(2.0) * v.imag();
    o.col(2 * kk + 1) = std::sqrt(2.0) * v.real();
    root(2 * kk) = root(2 * kk + 1) = std::sqrt(sigma);
  }
  out.U = h_mhalf * o * root.asDiagonal();

  RealMatrix s = RealMatrix::Zero(n2, n2);
  for (Eigen::Index kk = 0; kk < modes; ++kk) s(2 * kk, 2 * kk) = s(2 * kk + 1, 2 * kk + 1) = out.sigmas(kk);
  out.symplectic_residual = (out.U * jn * out.U.transpose() - jn).norm();
  out.diagonal_residual = (out.U.transpose() * hs * out.U - s).norm();
  return out;
}

}  // namespace qkl
