#pragma once

#include <stdexcept>
#include <string>

namespace qkl {

// Shape and argument-range violations are reported as std::invalid_argument.
// The types below cover the numerical failure modes.

/// A matrix that must be Hurwitz has an eigenvalue with real part >= -margin.
class not_hurwitz_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Cholesky (or an eigenvalue test) rejected a matrix required to be
/// symmetric positive definite.
class not_positive_definite_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computed residual or consistency check exceeded its tolerance.
class tolerance_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The spectral-radius condition of the QEF determinant formula failed.
class infeasible_error : public std::domain_error {
 public:
  infeasible_error(const std::string& what, double radius)
      : std::domain_error(what), radius_(radius) {}
  double radius() const noexcept { return radius_; }

 private:
  double radius_;
};

}  // namespace qkl
