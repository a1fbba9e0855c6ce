#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "chi/types.hpp"

namespace chi {

// Dense basis matrices are only cached up to this many qubits unless the
// caller raises the cap explicitly (4^n * 4^n complex doubles grow fast).
inline constexpr int kDefaultQubitCap = 4;

// 2^n -> n; throws ValidationError if dim is not a power of two >= 2.
int qubit_count_for_dim(Eigen::Index dim);

std::size_t pauli_dim(int n_qubits);    // 2^n
std::size_t pauli_count(int n_qubits);  // 4^n

// Base-4 index <-> label. Leftmost letter is the most significant digit and
// the leftmost (slowest) Kronecker factor: I=0, X=1, Y=2, Z=3, so "ZX" = 13.
std::string pauli_label(std::size_t index, int n_qubits);
std::size_t pauli_index(const std::string& label);

struct PauliTerm {
  std::size_t index;
  Complex phase;  // one of {1, -1, i, -i}
};

// E_a * E_b reduced to phase * E_c, digit by digit; O(n_qubits).
PauliTerm pauli_product(std::size_t a, std::size_t b, int n_qubits);

const std::vector<Matrix>& pauli_basis(int n_qubits, int cap = kDefaultQubitCap);
const Matrix& pauli_op(std::size_t index, int n_qubits);

// coeffs[n] = Tr(m * E_n) / d, so m = sum_n coeffs[n] E_n.
Vector expand_in_pauli(const Matrix& m);
Matrix pauli_reconstruct(const Vector& coeffs, int n_qubits);

// Rotates the vector by a global phase so coeffs[0] becomes real >= 0.
// If |coeffs[0]| < 1e-12 the input is returned unchanged and *fixed = false.
Vector phase_fix(const Vector& coeffs, bool* fixed = nullptr);

}  // namespace chi
