#include <gtest/gtest.h>

#include <random>

#include "qkl/numlin.hpp"
#include "test_oracles.hpp"

using namespace qkl;
using qkl::oracle::kron_lyap;
using qkl::oracle::random_matrix;
using qkl::oracle::random_spd;
using qkl::oracle::taylor_expm;

TEST(Expm, DiagonalAndZero) {
  RealMatrix d = RealMatrix::Zero(3, 3);
  d.diagonal() << -1.0, 0.5, 2.0;
  const RealMatrix e = expm(d);
  EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(e(2, 2), std::exp(2.0), 1e-13);
  EXPECT_LT((expm(RealMatrix::Zero(4, 4)) - RealMatrix::Identity(4, 4)).norm(), 1e-16);
}

TEST(Expm, RotationGenerator) {
  const RealMatrix j = jbar();
  const RealMatrix e = expm(j, std::numbers::pi / 2);
  EXPECT_LT((e - j).norm(), 1e-14);
}

TEST(Expm, MatchesTaylorOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const RealMatrix a = random_matrix(rng, 5, 5, 2.0);
    const RealMatrix ref = taylor_expm(a, 0.7);
    EXPECT_LT((expm(a, 0.7) - ref).norm(), 1e-12 * std::max(1.0, ref.norm()));
  }
}

TEST(Hurwitz, DetectsUnstable) {
  EXPECT_TRUE(is_hurwitz(-2.0 * RealMatrix::Identity(2, 2)));
  RealMatrix a = RealMatrix::Identity(2, 2);
  a(1, 1) = -1.0;
  EXPECT_FALSE(is_hurwitz(a));
  EXPECT_THROW(require_hurwitz(a, "test"), not_hurwitz_error);
  EXPECT_NEAR(spectral_radius(RealMatrix(jbar())), 1.0, 1e-14);
}

TEST(Lyap, ScalarCase) {
  RealMatrix a(1, 1), q(1, 1);
  a << -1.0;
  q << 2.0;
  EXPECT_NEAR(lyap(a, q)(0, 0), 1.0, 1e-15);
}

TEST(Lyap, MatchesKroneckerOracle) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    RealMatrix a = random_matrix(rng, 6, 6);
    a.diagonal().array() -= 4.0;
    if (!is_hurwitz(a)) continue;
    const RealMatrix q = random_spd(rng, 6);
    const RealMatrix x = lyap(a, q);
    EXPECT_LT((x - kron_lyap(a, q)).norm(), 1e-10 * x.norm());
    EXPECT_LT((a * x + x * a.transpose() + q).norm(), 1e-10 * q.norm());
  }
}

TEST(Lyap, ComplexRightHandSide) {
  std::mt19937_64 rng(7);
  RealMatrix a = random_matrix(rng, 4, 4);
  a.diagonal().array() -= 3.0;
  const RealMatrix qr = random_spd(rng, 4);
  const RealMatrix s = random_matrix(rng, 4, 4);
  const RealMatrix qi = s - s.transpose();
  const ComplexMatrix q = qr.cast<Complex>() + kI * qi.cast<Complex>();
  const ComplexMatrix x = lyap(a, q);
  EXPECT_LT((x.real() - kron_lyap(a, qr)).norm(), 1e-10);
  EXPECT_LT((x.imag() - kron_lyap(a, qi)).norm(), 1e-10);
}

TEST(Lyap, RejectsUnstable) {
  EXPECT_THROW(lyap(RealMatrix::Identity(2, 2), RealMatrix(RealMatrix::Identity(2, 2))), not_hurwitz_error);
}

TEST(HermEig, SortedDescendingWithResidual) {
  std::mt19937_64 rng(3);
  const RealMatrix re = random_spd(rng, 6);
  const RealMatrix s = random_matrix(rng, 6, 6);
  const ComplexMatrix m = re.cast<Complex>() + kI * (s - s.transpose()).cast<Complex>();
  const HermitianEig e = herm_eig(m);
  for (Eigen::Index i = 1; i < e.values.size(); ++i) EXPECT_GE(e.values(i - 1), e.values(i));
  EXPECT_LT((m * e.vectors - e.vectors * e.values.cast<Complex>().asDiagonal()).norm(), 1e-10);
  ComplexMatrix bad = m;
  bad(0, 1) += 1.0;
  EXPECT_THROW(herm_eig(bad), std::invalid_argument);
}

TEST(Williamson, IdentityScaled) {
  const WilliamsonFactorization w = williamson(3.0 * RealMatrix::Identity(4, 4));
  EXPECT_NEAR(w.sigmas(0), 3.0, 1e-12);
  EXPECT_NEAR(w.sigmas(1), 3.0, 1e-12);
  EXPECT_LT(w.symplectic_residual, 1e-12);
  EXPECT_LT(w.diagonal_residual, 1e-12);
}

TEST(Williamson, SqueezedDiagonal) {
  RealMatrix h = RealMatrix::Zero(2, 2);
  h.diagonal() << 4.0, 1.0;
  const WilliamsonFactorization w = williamson(h);
  EXPECT_NEAR(w.sigmas(0), 2.0, 1e-12);
}

TEST(Williamson, RandomResidualsAndDeterminant) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n2 = 2 * (1 + trial % 6);
    const RealMatrix h = random_spd(rng, n2);
    const WilliamsonFactorization w = williamson(h);
    const RealMatrix jn = symplectic_J(n2 / 2);
    EXPECT_LT((w.U * jn * w.U.transpose() - jn).norm(), 1e-10);
    EXPECT_LT(w.symplectic_residual, 1e-10);
    EXPECT_LT(w.diagonal_residual, 1e-10 * h.norm());
    const double prod = w.sigmas.array().square().prod();
    EXPECT_NEAR(prod / h.determinant(), 1.0, 1e-8);
    for (Eigen::Index k = 1; k < w.sigmas.size(); ++k) EXPECT_GE(w.sigmas(k - 1), w.sigmas(k));
  }
}

TEST(Williamson, RejectsIndefiniteAndOdd) {
  RealMatrix h = RealMatrix::Identity(2, 2);
  h(1, 1) = -1.0;
  EXPECT_THROW(williamson(h), not_positive_definite_error);
  EXPECT_THROW(williamson(RealMatrix::Identity(3, 3)), std::invalid_argument);
}
