#include <gtest/gtest.h>

#include <random>

#include "qkl/oqho.hpp"
#include "test_oracles.hpp"

using namespace qkl;

TEST(Model, CanonicalMatrices) {
  const OqhoModel m = canonical_model();
  EXPECT_LT((m.A + 2.0 * RealMatrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_LT((m.B - 2.0 * RealMatrix(jbar())).norm(), 1e-15);
  EXPECT_LT(m.pr_residual(), 1e-15);
  EXPECT_TRUE(m.hurwitz);
}

TEST(Model, FieldJ) {
  const RealMatrix j = field_J(4);
  EXPECT_EQ(j(0, 2), 1.0);
  EXPECT_EQ(j(2, 0), -1.0);
  EXPECT_LT((j * j + RealMatrix::Identity(4, 4)).norm(), 1e-15);
  EXPECT_THROW(field_J(3), std::invalid_argument);
}

TEST(Model, RejectsBadInputs) {
  const RealMatrix z = RealMatrix::Zero(2, 2);
  EXPECT_THROW(build_model(RealMatrix::Identity(2, 2), z, RealMatrix::Identity(2, 2)), std::invalid_argument);
  EXPECT_THROW(build_model(z, z, RealMatrix::Identity(2, 2)), std::invalid_argument);
  RealMatrix r(2, 2);
  r << 0.0, 1.0, 0.0, 0.0;
  EXPECT_THROW(build_model(jbar(), r, RealMatrix::Identity(2, 2)), std::invalid_argument);
  EXPECT_THROW(build_model(jbar(), z, RealMatrix::Identity(3, 2)), std::invalid_argument);
  // R = I, M = 0 gives a lossless oscillator with purely imaginary spectrum
  EXPECT_THROW(build_model(jbar(), RealMatrix::Identity(2, 2), RealMatrix::Zero(2, 2), true), not_hurwitz_error);
}

TEST(Model, DynamicsRoundTrip) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const OqhoModel m = oracle::random_stable_model(rng, 4, 2);
    EXPECT_LT(m.pr_residual(), 1e-12 * std::max(1.0, m.A.norm()));
    const RealMatrix theta = recover_theta(m.A, m.B, m.J);
    EXPECT_LT((theta - m.Theta).norm(), 1e-10);
    const OqhoModel d = model_from_dynamics(m.A, m.B, m.Theta, true);
    EXPECT_LT((d.A - m.A).norm(), 1e-15);
  }
}

TEST(Model, DynamicsViolatingRealizability) {
  const OqhoModel m = canonical_model();
  RealMatrix a = m.A;
  a(0, 0) += 0.1;
  EXPECT_THROW(model_from_dynamics(a, m.B, m.Theta), tolerance_error);
}

TEST(Covariance, CanonicalState) {
  const CovarianceKernel k = steady_covariance(canonical_model());
  EXPECT_LT((k.Sigma - RealMatrix::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((k.V.imag() - RealMatrix(jbar())).norm(), 1e-15);
  EXPECT_LT(k.ale_residual(), 1e-12);
  // K(tau) = e^{-2|tau|} (I + i jbar)
  const ComplexMatrix k03 = kernel_K(k, 0.3);
  EXPECT_LT((k03 - std::exp(-0.6) * k.V).norm(), 1e-14);
  EXPECT_EQ((kernel_K(k, -0.3) - k03.adjoint()).norm(), 0.0);
  EXPECT_LT((kernel_Lambda(k, 0.0) - RealMatrix(jbar())).norm(), 1e-15);
}

TEST(Covariance, ComplexAleMatchesTheta) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const OqhoModel m = oracle::random_stable_model(rng, 2 + 2 * (trial % 2), 2 + 2 * (trial / 5));
    const ComplexMatrix omega =
        RealMatrix::Identity(m.m, m.m).cast<Complex>() + kI * m.J.cast<Complex>();
    const ComplexMatrix v = lyap(m.A, ComplexMatrix(m.B.cast<Complex>() * omega * m.B.transpose().cast<Complex>()));
    EXPECT_LT((v.imag() - m.Theta).norm(), 1e-10);
    const CovarianceKernel k = steady_covariance(m);
    EXPECT_LT((k.Sigma - oracle::kron_lyap(m.A, m.B * m.B.transpose())).norm(), 1e-10 * k.Sigma.norm());
    // Lambda(tau) = e^{tau A} Theta
    EXPECT_LT((kernel_Lambda(k, 0.4) - oracle::taylor_expm(m.A, 0.4) * m.Theta).norm(), 1e-12);
  }
}

TEST(Covariance, HermitianSymmetryOfKernel) {
  std::mt19937_64 rng(31);
  const CovarianceKernel k = steady_covariance(oracle::random_stable_model(rng, 4, 4));
  for (double tau : {0.0, 0.1, 1.7}) EXPECT_EQ((kernel_K(k, -tau) - kernel_K(k, tau).adjoint()).norm(), 0.0);
  const ComplexMatrix k0 = kernel_K(k, 0.0);
  EXPECT_LT((k0 - k0.adjoint()).norm(), 1e-14);
}
