#pragma once

// Nystrom eigendecomposition of the integral operator with kernel K(s - t) on
// [0, T], plus Mercer sums built from it.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qkl/errors.hpp"
#include "qkl/numlin.hpp"
#include "qkl/oqho.hpp"
#include "qkl/quadrature.hpp"
#include "qkl/types.hpp"

namespace qkl {

struct KernelEigDecomposition {
  Quadrature grid;
  Eigen::Index n = 0;
  RealVector mu;     // descending, negatives clipped to zero
  ComplexMatrix h;   // (grid.size() * n) x modes; rows [i*n, i*n+n) hold h_k(t_i)
  double trace_target = 0.0;  // T Tr Sigma
  double clipped_mass = 0.0;  // |sum of clipped negative eigenvalues|
  double hermitian_residual = 0.0;  // ||M - M^*||_F of the assembled matrix
  ComplexMatrix weighted;     // W^{1/2} K W^{1/2}, kept for the direct QCF check
  std::vector<std::pair<int, int>> clusters;  // [begin, end) runs of degenerate mu

  int modes() const { return static_cast<int>(mu.size()); }
  double horizon() const { return grid.b - grid.a; }

  /// h_k(t_i) as a complex n-vector.
  ComplexVector at(int k, std::size_t node) const {
    return h.col(k).segment(static_cast<Eigen::Index>(node) * n, n);
  }
  RealVector phi(int k, std::size_t node) const { return at(k, node).real(); }
  RealVector psi(int k, std::size_t node) const { return at(k, node).imag(); }

  /// Off-grid value by barycentric interpolation inside the panel holding t.
  /// This is an approximation; on-grid callers should use at().
  ComplexVector interpolate(int k, double t) const {
    return interpolate_panel(grid, t, [&](std::size_t i) { return ComplexVector(at(k, i)); });
  }
};

/// Nystrom discretization of the operator with kernel K on a composite
/// Gauss-Legendre grid of `grid_size` nodes. The panels are shared by both
/// arguments, so the |s - t| kink of K only enters the diagonal panel blocks.
/// `n_modes <= 0` keeps the full spectrum.
inline KernelEigDecomposition nystrom_eig(const CovarianceKernel& kernel, double horizon,
                                          int grid_size, int n_modes = 0) {
  require_hurwitz(kernel.model.A, "nystrom_eig");
  if (grid_size < 16) throw std::invalid_argument("nystrom_eig: grid_size must be >= 16");
  const Eigen::Index n = kernel.model.n;
  const Eigen::Index dim = n * grid_size;
  if (n_modes > dim) throw std::invalid_argument("nystrom_eig: n_modes exceeds n * grid_size");
  const int keep = n_modes <= 0 ? static_cast<int>(dim) : n_modes;

  KernelEigDecomposition d;
  d.grid = composite_gauss_legendre_nodes(0.0, horizon, grid_size);
  d.n = n;
  d.trace_target = horizon * kernel.Sigma.trace();

  const std::size_t g = d.grid.size();
  std::vector<double> sw(g);
  for (std::size_t i = 0; i < g; ++i) sw[i] = std::sqrt(d.grid.weights[i]);

  ComplexMatrix m(dim, dim);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      const ComplexMatrix block = kernel_K(kernel, d.grid.nodes[i] - d.grid.nodes[j]);
      m.block(static_cast<Eigen::Index>(i) * n, static_cast<Eigen::Index>(j) * n, n, n) =
          (sw[i] * sw[j]) * block;
    }
  }
  d.hermitian_residual = (m - m.adjoint()).norm();
  if (d.hermitian_residual > 1e-8 * std::max(1.0, m.norm())) {
    std::ostringstream os;
    os << "nystrom_eig: assembled matrix not Hermitian (residual " << d.hermitian_residual << ")";
    throw tolerance_error(os.str());
  }
  const HermitianEig eig = herm_eig(m, 1e-8);

  d.mu.resize(keep);
  d.h.resize(dim, keep);
  for (int k = 0; k < keep; ++k) {
    double value = eig.values(k);
    if (value < 0.0) {
      d.clipped_mass += -value;
      value = 0.0;
    }
    d.mu(k) = value;
    ComplexVector v = eig.vectors.col(k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    v *= std::conj(v(arg)) / std::abs(v(arg));
    v(arg) = std::abs(v(arg));
    for (std::size_t i = 0; i < g; ++i)
      v.segment(static_cast<Eigen::Index>(i) * n, n) /= sw[i];
    d.h.col(k) = v;
  }
  for (int k = keep; k < eig.values.size(); ++k)
    if (eig.values(k) < 0.0) d.clipped_mass += -eig.values(k);

  const double tol = 1e-10 * std::max(d.mu.size() > 0 ? d.mu(0) : 0.0, 1e-300);
  for (int k = 0; k < keep;) {
    int e = k + 1;
    while (e < keep && std::abs(d.mu(e - 1) - d.mu(e)) <= tol) ++e;
    if (e - k > 1) d.clusters.emplace_back(k, e);
    k = e;
  }
  d.weighted = std::move(m);
  return d;
}

/// sum_{k<N} mu_k h_k(s) h_k(t)^* at grid nodes s = t_i, t = t_j.
inline ComplexMatrix mercer_K(const KernelEigDecomposition& d, std::size_t i, std::size_t j, int N) {
  if (N < 0 || N > d.modes()) throw std::invalid_argument("mercer_K: N outside computed modes");
  ComplexMatrix acc = ComplexMatrix::Zero(d.n, d.n);
  for (int k = 0; k < N; ++k) acc += d.mu(k) * d.at(k, i) * d.at(k, j).adjoint();
  return acc;
}

/// Mercer sum at arbitrary times; nodes are matched exactly, otherwise the
/// eigenfunctions are interpolated per panel.
inline ComplexMatrix mercer_K(const KernelEigDecomposition& d, double s, double t, int N) {
  if (N < 0 || N > d.modes()) throw std::invalid_argument("mercer_K: N outside computed modes");
  ComplexMatrix acc = ComplexMatrix::Zero(d.n, d.n);
  for (int k = 0; k < N; ++k) acc += d.mu(k) * d.interpolate(k, s) * d.interpolate(k, t).adjoint();
  return acc;
}

/// <f, h_k> for a real function sampled on the grid (rows = nodes, cols = n).
inline Complex project(const KernelEigDecomposition& d, const RealMatrix& f, int k) {
  Complex acc = 0.0;
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    acc += d.grid.weights[i] * f.row(static_cast<Eigen::Index>(i)).cast<Complex>().dot(d.at(k, i));
  return acc;
}

struct QcfExponent {
  double eigen_sum = 0.0;  // 1/2 sum_k mu_k |<f, h_k>|^2
  double direct = 0.0;     // 1/2 sum_ij w_i w_j f_i^T K(t_i - t_j) f_j
};

/// Both evaluations of 1/2 <f, K f>; throws when they disagree by more than
/// 1e-6 relative (the retained spectrum is then too short).
inline QcfExponent qcf_exponent_both(const KernelEigDecomposition& d, const RealMatrix& f) {
  if (f.rows() != static_cast<Eigen::Index>(d.grid.size()) || f.cols() != d.n)
    throw std::invalid_argument("qcf_exponent: f must be sampled as (grid nodes) x n");
  QcfExponent out;
  for (int k = 0; k < d.modes(); ++k) out.eigen_sum += 0.5 * d.mu(k) * std::norm(project(d, f, k));
  ComplexVector x(d.n * static_cast<Eigen::Index>(d.grid.size()));
  for (std::size_t i = 0; i < d.grid.size(); ++i)
    x.segment(static_cast<Eigen::Index>(i) * d.n, d.n) =
        std::sqrt(d.grid.weights[i]) * f.row(static_cast<Eigen::Index>(i)).transpose().cast<Complex>();
  out.direct = 0.5 * x.dot(d.weighted * x).real();
  const double scale = std::max(std::abs(out.direct), 1e-300);
  if (std::abs(out.eigen_sum - out.direct) > 1e-6 * scale && std::abs(out.direct) > 1e-300) {
    std::ostringstream os;
    os << "qcf_exponent: eigen-sum " << out.eigen_sum << " disagrees with direct quadrature "
       << out.direct << " (spectrum truncated too aggressively?)";
    throw tolerance_error(os.str());
  }
  return out;
}

inline double qcf_exponent(const KernelEigDecomposition& d, const RealMatrix& f) {
  return qcf_exponent_both(d, f).eigen_sum;
}

/// Mean-square remainder sum_{k>=N} mu_k, with the mass beyond the computed
/// modes estimated from the trace identity.
inline double ms_tail(const KernelEigDecomposition& d, int N) {
  if (N < 0 || N > d.modes()) throw std::invalid_argument("ms_tail: N outside computed modes");
  double computed_tail = 0.0;
  for (int k = N; k < d.modes(); ++k) computed_tail += d.mu(k);
  const double beyond = std::max(0.0, d.trace_target - d.mu.sum());
  return computed_tail + beyond;
}

}  // namespace qkl
