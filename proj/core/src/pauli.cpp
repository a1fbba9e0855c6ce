#include "chi/pauli.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <map>
#include <mutex>

namespace chi {

namespace {

constexpr char kLetters[4] = {'I', 'X', 'Y', 'Z'};

// Single-qubit products: result letter and phase as a power of i.
// Rows are the left factor, columns the right factor.
constexpr int kProdLetter[4][4] = {
    {0, 1, 2, 3},
    {1, 0, 3, 2},
    {2, 3, 0, 1},
    {3, 2, 1, 0},
};
constexpr int kProdPhasePow[4][4] = {
    {0, 0, 0, 0},
    {0, 0, 1, 3},  // XY = iZ, XZ = -iY
    {0, 3, 0, 1},  // YX = -iZ, YZ = iX
    {0, 1, 3, 0},  // ZX = iY, ZY = -iX
};

constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

int letter_value(char c) {
  switch (c) {
    case 'I': return 0;
    case 'X': return 1;
    case 'Y': return 2;
    case 'Z': return 3;
    default:
      throw ValidationError(std::string("invalid Pauli letter '") + c + "'");
  }
}

Matrix single_qubit_op(int letter) {
  Matrix m(2, 2);
  switch (letter) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

}  // namespace

int qubit_count_for_dim(Eigen::Index dim) {
  if (dim >= 2) {
    Eigen::Index d = dim;
    int n = 0;
    while (d % 2 == 0) {
      d /= 2;
      ++n;
    }
    if (d == 1) return n;
  }
  throw ValidationError("dimension " + std::to_string(dim) +
                        " is not a power of two >= 2");
}

std::size_t pauli_dim(int n_qubits) {
  if (n_qubits < 1) throw ValidationError("n_qubits must be >= 1");
  return std::size_t{1} << n_qubits;
}

std::size_t pauli_count(int n_qubits) {
  std::size_t d = pauli_dim(n_qubits);
  return d * d;
}

std::string pauli_label(std::size_t index, int n_qubits) {
  if (index >= pauli_count(n_qubits))
    throw ValidationError("Pauli index " + std::to_string(index) +
                          " out of range for " + std::to_string(n_qubits) +
                          " qubit(s)");
  std::string label(static_cast<std::size_t>(n_qubits), 'I');
  for (int q = n_qubits - 1; q >= 0; --q) {
    label[static_cast<std::size_t>(q)] = kLetters[index % 4];
    index /= 4;
  }
  return label;
}

std::size_t pauli_index(const std::string& label) {
  if (label.empty()) throw ValidationError("empty Pauli label");
  std::size_t index = 0;
  for (char c : label) index = index * 4 + static_cast<std::size_t>(letter_value(c));
  return index;
}

PauliTerm pauli_product(std::size_t a, std::size_t b, int n_qubits) {
  std::size_t count = pauli_count(n_qubits);
  if (a >= count || b >= count)
    throw ValidationError("Pauli index out of range in product");
  std::size_t result = 0;
  int phase_pow = 0;
  for (int q = n_qubits - 1; q >= 0; --q) {
    std::size_t shift = 2 * static_cast<std::size_t>(q);
    int da = static_cast<int>((a >> shift) & 3);
    int db = static_cast<int>((b >> shift) & 3);
    result |= static_cast<std::size_t>(kProdLetter[da][db]) << shift;
    phase_pow += kProdPhasePow[da][db];
  }
  return {result, kIPow[phase_pow % 4]};
}

const std::vector<Matrix>& pauli_basis(int n_qubits, int cap) {
  if (n_qubits < 1) throw ValidationError("n_qubits must be >= 1");
  if (n_qubits > cap)
    throw ValidationError("requested " + std::to_string(n_qubits) +
                          "-qubit basis exceeds cap of " + std::to_string(cap));
  static std::map<int, std::vector<Matrix>> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n_qubits);
  if (it != cache.end()) return it->second;

  std::vector<Matrix> ops;
  ops.reserve(pauli_count(n_qubits));
  for (std::size_t idx = 0; idx < pauli_count(n_qubits); ++idx) {
    Matrix m = single_qubit_op(static_cast<int>((idx >> (2 * (n_qubits - 1))) & 3));
    for (int q = 1; q < n_qubits; ++q) {
      int letter = static_cast<int>((idx >> (2 * (n_qubits - 1 - q))) & 3);
      m = Eigen::kroneckerProduct(m, single_qubit_op(letter)).eval();
    }
    ops.push_back(std::move(m));
  }
  return cache.emplace(n_qubits, std::move(ops)).first->second;
}

const Matrix& pauli_op(std::size_t index, int n_qubits) {
  const auto& basis = pauli_basis(n_qubits);
  if (index >= basis.size())
    throw ValidationError("Pauli index out of range");
  return basis[index];
}

Vector expand_in_pauli(const Matrix& m) {
  if (m.rows() != m.cols()) throw ValidationError("matrix must be square");
  int n = qubit_count_for_dim(m.rows());
  const auto& basis = pauli_basis(n);
  const double d = static_cast<double>(m.rows());
  Vector coeffs(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k)
    coeffs[static_cast<Eigen::Index>(k)] =
        m.cwiseProduct(basis[k].transpose()).sum() / d;
  return coeffs;
}

Matrix pauli_reconstruct(const Vector& coeffs, int n_qubits) {
  const auto& basis = pauli_basis(n_qubits);
  if (static_cast<std::size_t>(coeffs.size()) != basis.size())
    throw ValidationError("coefficient count does not match basis size");
  Eigen::Index d = static_cast<Eigen::Index>(pauli_dim(n_qubits));
  Matrix m = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < basis.size(); ++k)
    m += coeffs[static_cast<Eigen::Index>(k)] * basis[k];
  return m;
}

Vector phase_fix(const Vector& coeffs, bool* fixed) {
  if (coeffs.size() == 0) throw ValidationError("empty coefficient vector");
  Complex c0 = coeffs[0];
  if (std::abs(c0) < 1e-12) {
    if (fixed) *fixed = false;
    return coeffs;
  }
  if (fixed) *fixed = true;
  return coeffs * std::conj(c0 / std::abs(c0));
}

}  // namespace chi
