// Canonical oscillator end to end: the QEF for a small isotropic weight
// compared with its first-order asymptote.

#include <cstdio>

#include "qkl/qkl.hpp"

int main() {
  using namespace qkl;
  const CovarianceKernel kernel = steady_covariance(canonical_model());
  const KernelEigDecomposition d = nystrom_eig(kernel, 1.0, 200);
  std::printf("sum mu = %.6f (T Tr Sigma = %.6f)\n", d.mu.sum(), d.trace_target);
  for (int k = 0; k < 5; ++k) std::printf("mu_%d = %.6f\n", k, d.mu(k));

  const RealMatrix pi = 1e-3 * RealMatrix::Identity(2, 2);
  for (int n : {1, 2, 4, 8, 16}) {
    const QefProblem p = qef_pipeline(kernel, d, pi, n);
    std::printf("N = %2d  Xi = %.9f  radius = %.3e  tail = %.3e\n", n, p.xi, p.radius, p.tail_mass);
  }
  std::printf("exp(E Q) = %.9f\n", std::exp(mean_q(kernel, pi, 1.0)));

  const double c = 0.1;
  const RealMatrix h = c * RealMatrix::Identity(2, 2);
  std::printf("single mode: formula %.9f oracle %.9f exact %.9f\n", qef_value(h), oracle_qef(h, 1).xi,
              std::exp(2 * c));
}
