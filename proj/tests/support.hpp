#pragma once

// Shared helpers for the unit and acceptance suites: deterministic random
// matrices/channels and a few comparison utilities.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "chi/pauli.hpp"
#include "chi/process.hpp"
#include "chi/rng.hpp"
#include "chi/types.hpp"

namespace testsupport {

using chi::Complex;
using chi::Matrix;
using chi::Vector;

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Standard normal via Box-Muller on the counter-based stream.
inline double normal(chi::RngStream& rng) {
  double u1 = std::max(rng.uniform(), 1e-300);
  double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

inline Matrix random_ginibre(chi::RngStream& rng, Eigen::Index rows,
                             Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = Complex(normal(rng), normal(rng));
  return m;
}

inline Matrix random_hermitian(chi::RngStream& rng, Eigen::Index d) {
  Matrix g = random_ginibre(rng, d, d);
  return Matrix((g + g.adjoint()) / 2.0);
}

inline Matrix exp_i_hermitian(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Vector phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    phases[i] = std::exp(Complex(0, es.eigenvalues()[i]));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline Matrix psd_inverse_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  Vector inv(s.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    inv[i] = Complex(1.0 / std::sqrt(es.eigenvalues()[i]), 0);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().adjoint();
}

// Haar-ish unitary: QR of a Ginibre matrix with the R diagonal phases fixed.
inline Matrix random_unitary(chi::RngStream& rng, Eigen::Index d) {
  Matrix g = random_ginibre(rng, d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < d; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

inline Vector random_state(chi::RngStream& rng, Eigen::Index d) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = Complex(normal(rng), normal(rng));
  v.normalize();
  return v;
}

inline Matrix random_density(chi::RngStream& rng, Eigen::Index d) {
  Matrix g = random_ginibre(rng, d, d);
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

// Kraus set renormalized so sum_k A_k^dag A_k = 1 up to fp.
inline chi::ProcessMatrix channel_from_raw_kraus(std::vector<Matrix> kraus) {
  Matrix s = Matrix::Zero(kraus[0].rows(), kraus[0].cols());
  for (const Matrix& a : kraus) s += a.adjoint() * a;
  Matrix fix = psd_inverse_sqrt(s);
  std::vector<chi::KrausTerm> terms;
  terms.reserve(kraus.size());
  for (Matrix& a : kraus) terms.push_back({1.0, Matrix(a * fix)});
  return chi::chi_from_kraus(terms);
}

// Random trace-preserving channel close to the identity: a small coherent
// rotation plus `extra` weak noise operators.
inline chi::ProcessMatrix random_near_identity_channel(chi::RngStream& rng,
                                                       int n_qubits,
                                                       double coherent_scale,
                                                       double noise_scale,
                                                       int extra = 3) {
  Eigen::Index d = static_cast<Eigen::Index>(chi::pauli_dim(n_qubits));
  Matrix h = random_hermitian(rng, d);
  h *= coherent_scale / std::max(1e-300, h.cwiseAbs().maxCoeff());
  std::vector<Matrix> kraus;
  kraus.push_back(exp_i_hermitian(h));
  for (int k = 0; k < extra; ++k)
    kraus.push_back(Matrix(noise_scale * random_ginibre(rng, d, d)));
  return channel_from_raw_kraus(std::move(kraus));
}

// Fully random trace-preserving channel (not near identity).
inline chi::ProcessMatrix random_channel(chi::RngStream& rng, int n_qubits,
                                         int n_kraus = 4) {
  Eigen::Index d = static_cast<Eigen::Index>(chi::pauli_dim(n_qubits));
  std::vector<Matrix> kraus;
  for (int k = 0; k < n_kraus; ++k) kraus.push_back(random_ginibre(rng, d, d));
  return channel_from_raw_kraus(std::move(kraus));
}

}  // namespace testsupport
