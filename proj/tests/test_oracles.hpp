#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <random>

#include "qkl/oqho.hpp"
#include "qkl/types.hpp"

namespace qkl::oracle {

/// e^{tA} by scaling and squaring of a plain Taylor series.
inline RealMatrix taylor_expm(const RealMatrix& a, double t = 1.0) {
  RealMatrix m = t * a;
  int squarings = 0;
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  m /= std::ldexp(1.0, squarings);
  const Eigen::Index n = a.rows();
  RealMatrix sum = RealMatrix::Identity(n, n);
  RealMatrix term = RealMatrix::Identity(n, n);
  for (int k = 1; k < 30; ++k) {
    term = term * m / k;
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// A X + X A^T + Q = 0 through the n^2 x n^2 Kronecker system.
inline RealMatrix kron_lyap(const RealMatrix& a, const RealMatrix& q) {
  const Eigen::Index n = a.rows();
  const RealMatrix id = RealMatrix::Identity(n, n);
  const RealMatrix big = kron(id, a) + kron(a, id);
  const RealVector rhs = -Eigen::Map<const RealVector>(q.data(), n * n);
  const RealVector x = big.partialPivLu().solve(rhs);
  return Eigen::Map<const RealMatrix>(x.data(), n, n);
}

inline RealMatrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  RealMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

inline RealMatrix random_spd(std::mt19937_64& rng, Eigen::Index n, double floor = 0.1) {
  const RealMatrix g = random_matrix(rng, n, n);
  RealMatrix h = g * g.transpose();
  h.diagonal().array() += floor;
  return h;
}

/// Random (Theta, R, M) model with A Hurwitz and spectral abscissa below -0.1,
/// by rejection sampling.
inline OqhoModel random_stable_model(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const RealMatrix s = random_matrix(rng, n, n);
    RealMatrix theta = 0.5 * (s - s.transpose());
    theta += kron(RealMatrix::Identity(n / 2, n / 2), RealMatrix(jbar()));
    const RealMatrix g = random_matrix(rng, n, n, 0.3);
    const RealMatrix r = 0.5 * (g + g.transpose());
    const RealMatrix mm = random_matrix(rng, m, n);
    try {
      OqhoModel model = build_model(theta, r, mm);
      if (eigenvalues(model.A).real().maxCoeff() < -0.1) return model;
    } catch (const std::exception&) {
    }
  }
  throw std::runtime_error("random_stable_model: rejection sampling failed");
}

/// Two uncoupled copies of the canonical oscillator: A = -2 I_4, Sigma = I_4.
inline OqhoModel doubled_canonical_model() {
  const RealMatrix theta = kron(RealMatrix(jbar()), RealMatrix::Identity(2, 2));
  return build_model(theta, RealMatrix::Zero(4, 4), RealMatrix::Identity(4, 4), true);
}

/// Composite Simpson rule with `intervals` (even) subintervals.
template <typename F>
auto simpson(double a, double b, int intervals, F&& f) {
  const double h = (b - a) / intervals;
  auto acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) acc = acc + ((i % 2) ? 4.0 : 2.0) * f(a + i * h);
  return decltype(acc)(acc * (h / 3.0));
}

}  // namespace qkl::oracle
