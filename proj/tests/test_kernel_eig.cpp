#include <gtest/gtest.h>

#include <random>

#include "qkl/kernel_eig.hpp"
#include "test_oracles.hpp"

using namespace qkl;

namespace {

const CovarianceKernel& canonical() {
  static const CovarianceKernel k = steady_covariance(canonical_model());
  return k;
}

const KernelEigDecomposition& canonical_decomp() {
  static const KernelEigDecomposition d = nystrom_eig(canonical(), 1.0, 400);
  return d;
}

/// Eigenvalues of the scalar kernel e^{-a|s-t|} on [0, T]: 2a / (a^2 + w^2) with
/// (w^2 - a^2) tan(wT) = 2 a w, one root per branch of tan.
std::vector<double> exponential_kernel_eigs(double a, double T, int count) {
  std::vector<double> out;
  auto f = [&](double w) { return (w * w - a * a) * std::sin(w * T) - 2.0 * a * w * std::cos(w * T); };
  const double step = 1e-4;
  double lo = step, flo = f(lo);
  while (static_cast<int>(out.size()) < count) {
    const double hi = lo + step, fhi = f(hi);
    if ((flo < 0) != (fhi < 0)) {
      double x0 = lo, x1 = hi;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (x0 + x1);
        ((f(x0) < 0) != (f(mid) < 0)) ? x1 = mid : x0 = mid;
      }
      const double w = 0.5 * (x0 + x1);
      out.push_back(2.0 * a / (a * a + w * w));
    }
    lo = hi;
    flo = fhi;
  }
  return out;
}

}  // namespace

TEST(Nystrom, CanonicalSpectrumMatchesAnalyticRoots) {
  // K = e^{-2|tau|} (I + i jbar) and I + i jbar = 2 u u^*, so mu_k = 2 nu_k of e^{-2|tau|}
  const KernelEigDecomposition& d = canonical_decomp();
  const std::vector<double> nu = exponential_kernel_eigs(2.0, 1.0, 8);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(d.mu(k), 2.0 * nu[k], 1e-5 * d.mu(0)) << k;
  // the orthogonal direction carries no mass
  EXPECT_LT(d.mu(d.modes() / 2 + 1), 1e-10);
}

TEST(Nystrom, TraceIdentity) {
  const KernelEigDecomposition& d = canonical_decomp();
  EXPECT_NEAR(d.trace_target, 2.0, 1e-14);
  EXPECT_LT(std::abs(d.mu.sum() - d.trace_target), 1e-3 * d.trace_target);
  EXPECT_NEAR(ms_tail(d, 0), d.trace_target, 1e-3 * d.trace_target);
  EXPECT_LT(d.clipped_mass, 1e-10);
}

TEST(Nystrom, EigenfunctionsOrthonormalAndPhaseFixed) {
  const KernelEigDecomposition& d = canonical_decomp();
  for (int j = 0; j < 5; ++j) {
    for (int k = 0; k < 5; ++k) {
      Complex ip = 0.0;
      for (std::size_t i = 0; i < d.grid.size(); ++i) ip += d.grid.weights[i] * d.at(j, i).dot(d.at(k, i));
      EXPECT_NEAR(std::abs(ip - (j == k ? 1.0 : 0.0)), 0.0, 1e-10);
    }
    Eigen::Index arg = 0;
    ComplexVector scaled = d.h.col(j);
    for (std::size_t i = 0; i < d.grid.size(); ++i)
      scaled.segment(static_cast<Eigen::Index>(i) * 2, 2) *= std::sqrt(d.grid.weights[i]);
    scaled.cwiseAbs().maxCoeff(&arg);
    EXPECT_EQ(scaled(arg).imag(), 0.0);
    EXPECT_GT(scaled(arg).real(), 0.0);
  }
}

TEST(Nystrom, GridRefinement) {
  const KernelEigDecomposition coarse = nystrom_eig(canonical(), 1.0, 200, 4);
  const KernelEigDecomposition& fine = canonical_decomp();
  EXPECT_NEAR(coarse.mu(0), fine.mu(0), 1e-4 * fine.mu(0));
  EXPECT_EQ(coarse.modes(), 4);
}

TEST(Nystrom, MercerReconstruction) {
  const KernelEigDecomposition& d = canonical_decomp();
  for (std::size_t i : {std::size_t{0}, std::size_t{123}, std::size_t{399}})
    EXPECT_LT((mercer_K(d, i, i, d.modes()) - canonical().V).norm(), 1e-3);
  const ComplexMatrix off = mercer_K(d, std::size_t{50}, std::size_t{250}, d.modes());
  EXPECT_LT((off - kernel_K(canonical(), d.grid.nodes[50] - d.grid.nodes[250])).norm(), 1e-8);
  const ComplexMatrix interp = mercer_K(d, 0.31, 0.77, d.modes());
  EXPECT_LT((interp - kernel_K(canonical(), 0.31 - 0.77)).norm(), 1e-3);
}

TEST(Nystrom, InterpolationAgreesOnNodes) {
  const KernelEigDecomposition& d = canonical_decomp();
  EXPECT_LT((d.interpolate(2, d.grid.nodes[17]) - d.at(2, 17)).norm(), 1e-12);
}

TEST(Nystrom, PhaseInvarianceOfMercerSum) {
  KernelEigDecomposition d = canonical_decomp();
  const ComplexMatrix before = mercer_K(d, std::size_t{10}, std::size_t{300}, 12);
  for (int k = 0; k < 12; ++k) d.h.col(k) *= std::polar(1.0, 0.37 * (k + 1));
  EXPECT_LT((mercer_K(d, std::size_t{10}, std::size_t{300}, 12) - before).norm(), 1e-12);
}

TEST(Nystrom, QcfExponentTwoWays) {
  const KernelEigDecomposition& d = canonical_decomp();
  RealMatrix f(d.grid.size(), 2);
  for (std::size_t i = 0; i < d.grid.size(); ++i) f.row(i) << std::sin(3.0 * d.grid.nodes[i]), 1.0;
  const QcfExponent q = qcf_exponent_both(d, f);
  EXPECT_NEAR(q.eigen_sum, q.direct, 1e-9 * q.direct);
  EXPECT_GT(q.direct, 0.0);
  KernelEigDecomposition shortened = nystrom_eig(canonical(), 1.0, 64, 2);
  RealMatrix g(shortened.grid.size(), 2);
  for (std::size_t i = 0; i < shortened.grid.size(); ++i) g.row(i) << std::sin(30.0 * shortened.grid.nodes[i]), 0.0;
  EXPECT_THROW(qcf_exponent_both(shortened, g), tolerance_error);
}

TEST(Nystrom, RandomModelTrace) {
  std::mt19937_64 rng(53);
  const CovarianceKernel k = steady_covariance(oracle::random_stable_model(rng, 4, 2));
  const KernelEigDecomposition d = nystrom_eig(k, 0.8, 128);
  EXPECT_LT(std::abs(d.mu.sum() - d.trace_target), 1e-3 * d.trace_target);
  EXPECT_LT(d.hermitian_residual, 1e-12);
  for (int i = 1; i < d.modes(); ++i) EXPECT_GE(d.mu(i - 1), d.mu(i));
}

TEST(Nystrom, RejectsBadInput) {
  EXPECT_THROW(nystrom_eig(canonical(), 1.0, 8), std::invalid_argument);
  EXPECT_THROW(nystrom_eig(canonical(), 1.0, 16, 100), std::invalid_argument);
  EXPECT_THROW(mercer_K(canonical_decomp(), std::size_t{0}, std::size_t{0}, 100000), std::invalid_argument);
}
