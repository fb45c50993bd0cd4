#pragma once

// Open quantum harmonic oscillator models and the two-point covariance kernel
// of their invariant Gaussian state.

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

#include "qkl/errors.hpp"
#include "qkl/numlin.hpp"
#include "qkl/types.hpp"

namespace qkl {

inline constexpr double kPrTolerance = 1e-12;
inline constexpr double kThetaSingularTolerance = 1e-12;

/// dX = A X dt + B dW with CCR matrix Theta and field CCR matrix J.
/// When built from (Theta, R, M): A = 2 Theta (R + M^T J M), B = 2 Theta M^T.
struct OqhoModel {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  RealMatrix Theta;
  std::optional<RealMatrix> R;
  std::optional<RealMatrix> M;
  RealMatrix A;
  RealMatrix B;
  RealMatrix J;
  bool hurwitz = false;

  /// ||A Theta + Theta A^T + B J B^T||_F
  double pr_residual() const {
    return (A * Theta + Theta * A.transpose() + B * J * B.transpose()).norm();
  }
};

namespace detail {

inline void validate_theta(const RealMatrix& theta) {
  require_square(theta, "OqhoModel");
  require_finite(theta, "OqhoModel");
  if (theta.rows() % 2 != 0)
    throw std::invalid_argument("OqhoModel: number of system variables n must be even");
  const double norm = theta.norm();
  if ((theta + theta.transpose()).norm() > kPrTolerance * std::max(1.0, norm))
    throw std::invalid_argument("OqhoModel: Theta is not antisymmetric");
  const Eigen::JacobiSVD<RealMatrix> svd(theta);
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > kThetaSingularTolerance * norm)) {
    std::ostringstream os;
    os << "OqhoModel: Theta is singular (smallest singular value " << smin << ")";
    throw std::invalid_argument(os.str());
  }
}

inline void finish_model(OqhoModel& model, bool require_stable) {
  const double scale = std::max(
      1.0, model.A.norm() * model.Theta.norm() + model.B.norm() * model.B.norm() * model.J.norm());
  const double res = model.pr_residual();
  if (res > kPrTolerance * scale) {
    std::ostringstream os;
    os << "OqhoModel: physical realizability residual " << res << " exceeds tolerance";
    throw tolerance_error(os.str());
  }
  model.hurwitz = is_hurwitz(model.A);
  if (require_stable) require_hurwitz(model.A, "OqhoModel");
}

}  // namespace detail

/// Builds the drift and dispersion from (Theta, R, M).
inline OqhoModel build_model(const RealMatrix& theta, const RealMatrix& r, const RealMatrix& m,
                             bool require_stable = false) {
  detail::validate_theta(theta);
  const Eigen::Index n = theta.rows();
  if (r.rows() != n || r.cols() != n)
    throw std::invalid_argument("build_model: R must be n x n");
  if ((r - r.transpose()).norm() > kPrTolerance * std::max(1.0, r.norm()))
    throw std::invalid_argument("build_model: R is not symmetric");
  if (m.cols() != n) throw std::invalid_argument("build_model: M must have n columns");
  if (m.rows() <= 0 || m.rows() % 2 != 0)
    throw std::invalid_argument("build_model: number of field channels m must be even");
  require_finite(r, "build_model");
  require_finite(m, "build_model");

  OqhoModel model;
  model.n = n;
  model.m = m.rows();
  model.Theta = theta;
  model.R = r;
  model.M = m;
  model.J = field_J(model.m);
  model.A = 2.0 * theta * (r + m.transpose() * model.J * m);
  model.B = 2.0 * theta * m.transpose();
  detail::finish_model(model, require_stable);
  return model;
}

/// Direct (A, B, Theta) construction with physical-realizability validation.
inline OqhoModel model_from_dynamics(const RealMatrix& a, const RealMatrix& b,
                                     const RealMatrix& theta, bool require_stable = false) {
  detail::validate_theta(theta);
  const Eigen::Index n = theta.rows();
  if (a.rows() != n || a.cols() != n) throw std::invalid_argument("model_from_dynamics: A must be n x n");
  if (b.rows() != n || b.cols() <= 0 || b.cols() % 2 != 0)
    throw std::invalid_argument("model_from_dynamics: B must be n x m with m even");
  require_finite(a, "model_from_dynamics");
  require_finite(b, "model_from_dynamics");
  OqhoModel model;
  model.n = n;
  model.m = b.cols();
  model.Theta = theta;
  model.A = a;
  model.B = b;
  model.J = field_J(model.m);
  detail::finish_model(model, require_stable);
  return model;
}

/// Theta = int_0^inf e^{tA} B J B^T e^{tA^T} dt, i.e. the ALE solution of the PR condition.
inline RealMatrix recover_theta(const RealMatrix& a, const RealMatrix& b, const RealMatrix& j) {
  const RealMatrix x = lyap(a, RealMatrix(b * j * b.transpose()));
  const double asym = (x + x.transpose()).norm();
  if (asym > 1e-10 * std::max(1.0, x.norm())) {
    std::ostringstream os;
    os << "recover_theta: solution not antisymmetric (residual " << asym << ")";
    throw tolerance_error(os.str());
  }
  return x;
}

/// Invariant Gaussian state of the stable model: V = Sigma + i Theta.
struct CovarianceKernel {
  OqhoModel model;
  RealMatrix Sigma;
  ComplexMatrix V;

  /// ||A V + V A^T + B Omega B^T||_F with Omega = I + iJ.
  double ale_residual() const {
    const ComplexMatrix omega =
        RealMatrix::Identity(model.m, model.m).cast<Complex>() + kI * model.J.cast<Complex>();
    const ComplexMatrix a = model.A.cast<Complex>();
    const ComplexMatrix b = model.B.cast<Complex>();
    return (a * V + V * a.transpose() + b * omega * b.transpose()).norm();
  }
};

inline CovarianceKernel steady_covariance(const OqhoModel& model) {
  require_hurwitz(model.A, "steady_covariance");
  CovarianceKernel k;
  k.model = model;
  const RealMatrix sigma = lyap(model.A, RealMatrix(model.B * model.B.transpose()));
  k.Sigma = 0.5 * (sigma + sigma.transpose());
  k.V = k.Sigma.cast<Complex>() + kI * model.Theta.cast<Complex>();
  const double scale = std::max(1.0, 2.0 * model.B.norm() * model.B.norm());
  const double res = k.ale_residual();
  if (res > 1e-10 * scale) {
    std::ostringstream os;
    os << "steady_covariance: ALE residual " << res << " exceeds tolerance";
    throw tolerance_error(os.str());
  }
  return k;
}

/// K(tau) = e^{tau A} V for tau >= 0. Negative arguments are evaluated as the
/// adjoint of the positive branch, so K(-tau) = K(tau)^* holds bit for bit.
inline ComplexMatrix kernel_K(const CovarianceKernel& kernel, double tau) {
  const ComplexMatrix pos = expm(kernel.model.A, std::abs(tau)).cast<Complex>() * kernel.V;
  if (tau >= 0.0) return pos;
  return pos.adjoint();
}

/// Two-point CCR matrix Lambda(tau) = Im K(tau).
inline RealMatrix kernel_Lambda(const CovarianceKernel& kernel, double tau) {
  return kernel_K(kernel, tau).imag();
}

/// Theta = jbar, R = 0, M = I_2: A = -2 I, B = 2 jbar, Sigma = I.
inline OqhoModel canonical_model() {
  return build_model(jbar(), RealMatrix::Zero(2, 2), RealMatrix::Identity(2, 2), true);
}

}  // namespace qkl
