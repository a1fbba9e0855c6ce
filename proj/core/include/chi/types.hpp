#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace chi {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Input violates a structural precondition (shape, hermiticity, positivity, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Computation left its regime of validity (negative spectrum, divergence, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base tolerance used by the structural validators. Mutable so the CLI can
// relax or tighten every check at once; library defaults read it lazily.
inline double& validation_tolerance() {
  static double tol = 1e-10;
  return tol;
}

}  // namespace chi
