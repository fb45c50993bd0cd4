#include <gtest/gtest.h>

#include <random>

#include "qkl/fock_oracle.hpp"
#include "qkl/qef.hpp"
#include "test_oracles.hpp"

using namespace qkl;

TEST(TruncatedMode, OperatorsAndVacuumMoments) {
  const TruncatedMode m = build_mode(12);
  EXPECT_LT((m.q - m.q.adjoint()).norm(), 1e-15);
  EXPECT_LT((m.p - m.p.adjoint()).norm(), 1e-15);
  const ComplexMatrix comm = m.xi * m.eta - m.eta * m.xi;
  EXPECT_LT((comm.topLeftCorner(11, 11) - 2.0 * kI * ComplexMatrix::Identity(11, 11)).norm(), 1e-12);
  EXPECT_NEAR(std::abs((m.xi * m.xi)(0, 0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs((m.xi * m.eta)(0, 0) - kI), 0.0, 1e-15);
  EXPECT_THROW(build_mode(7), std::invalid_argument);
}

TEST(TruncatedMode, NumberOperatorIdentity) {
  // xi^2 + eta^2 = 2 (2 n + 1) below the truncation edge
  const TruncatedMode m = build_mode(10);
  const ComplexMatrix s = m.xi * m.xi + m.eta * m.eta;
  for (int k = 0; k < 9; ++k) EXPECT_NEAR(s(k, k).real(), 2.0 * (2 * k + 1), 1e-12);
}

TEST(OracleMoments, ProductVacuum) {
  const ComplexMatrix g = oracle_moments(3, 8);
  const ComplexMatrix gamma = RealMatrix::Identity(2, 2).cast<Complex>() + kI * RealMatrix(jbar()).cast<Complex>();
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      const ComplexMatrix block = g.block(2 * j, 2 * k, 2, 2);
      EXPECT_LT((block - (j == k ? gamma : ComplexMatrix::Zero(2, 2))).norm(), 1e-12);
    }
  EXPECT_NEAR(std::abs(oracle_fourth_moment(12) - 3.0), 0.0, 1e-12);
}

TEST(OracleQef, SingleModeClosedForm) {
  const OracleResult r = oracle_qef(0.1 * RealMatrix::Identity(2, 2), 1, 40);
  EXPECT_NEAR(r.xi, std::exp(0.2), 1e-6);
  EXPECT_LT(r.refined_delta, 1e-9);
  EXPECT_EQ(oracle_qef(RealMatrix::Zero(2, 2), 1).xi, 1.0);
  std::vector<double> mu{0.2};
  std::vector<Eigen::Matrix2d> g{0.5 * Eigen::Matrix2d::Identity()};
  EXPECT_NEAR(oracle_qef(mu, g, 1).xi, std::exp(0.2), 1e-6);
}

TEST(OracleQef, MatchesDeterminantFormula) {
  std::mt19937_64 rng(73);
  for (int n : {1, 2}) {
    for (int trial = 0; trial < 3; ++trial) {
      RealMatrix h = oracle::random_spd(rng, 2 * n);
      h *= 0.04 / h.norm();
      const double oracle = oracle_qef(h, n).xi;
      EXPECT_NEAR(qef_value(h), oracle, 1e-8 * oracle) << n;
    }
  }
}

TEST(OracleQef, ThreeModesFactorizeWhenDiagonal) {
  RealMatrix h = RealMatrix::Zero(6, 6);
  h.diagonal() << 0.03, 0.03, 0.02, 0.02, 0.01, 0.01;
  const double v = oracle_qef(h, 3, 10).xi;
  EXPECT_NEAR(v, std::exp(0.06) * std::exp(0.04) * std::exp(0.02), 1e-6 * v);
}

TEST(OracleQef, DetectsShortTruncation) {
  // c (xi^2 + eta^2) stays diagonal under truncation; a squeezed H does not
  RealMatrix h = RealMatrix::Zero(2, 2);
  h.diagonal() << 0.15, 0.05;
  EXPECT_THROW(oracle_qef(h, 1, 10), tolerance_error);
  const OracleResult ok = oracle_qef(h, 1, 40);
  EXPECT_NEAR(ok.xi, qef_value(h), 1e-8 * ok.xi);
  EXPECT_THROW(oracle_qef(RealMatrix::Identity(2, 2), 4), std::invalid_argument);
}

TEST(OracleQef, OrderedSameModeTerms) {
  // an antisymmetric same-mode H block makes Q non-Hermitian
  RealMatrix h = RealMatrix::Zero(2, 2);
  h(0, 1) = 0.1;
  h(1, 0) = -0.1;
  EXPECT_THROW(oracle_qef(h, 1, 16), tolerance_error);
}
