#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qkl {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// The 2x2 symplectic unit [[0, 1], [-1, 0]].
inline Eigen::Matrix2d jbar() {
  Eigen::Matrix2d j;
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

/// Kronecker product of two dense matrices of the same scalar type.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(
    const Eigen::MatrixBase<Derived>& a,
    const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>& b) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                              a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Field CCR matrix J = jbar (x) I_{m/2}, i.e. [[0, I], [-I, 0]].
inline RealMatrix field_J(Eigen::Index m) {
  if (m <= 0 || m % 2 != 0)
    throw std::invalid_argument("field_J: dimension must be even and positive, got " +
                                std::to_string(m));
  return kron(jbar(), RealMatrix::Identity(m / 2, m / 2));
}

/// Mode-space symplectic form J_N = I_N (x) jbar, ordering (xi_0, eta_0, xi_1, ...).
inline RealMatrix symplectic_J(Eigen::Index modes) {
  if (modes <= 0) throw std::invalid_argument("symplectic_J: mode count must be positive");
  return kron(RealMatrix::Identity(modes, modes), jbar());
}

inline void require_square(const auto& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": matrix must be square and non-empty (got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
}

inline void require_finite(const auto& m, const char* who) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entries");
}

}  // namespace qkl
