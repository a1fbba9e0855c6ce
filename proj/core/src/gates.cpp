#include "chi/gates.hpp"

#include <algorithm>
#include <cmath>

#include "chi/pauli.hpp"

namespace chi {

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}

Matrix gate_identity(int n_qubits) {
  Eigen::Index d = static_cast<Eigen::Index>(pauli_dim(n_qubits));
  return Matrix::Identity(d, d);
}

Matrix gate_x() { return pauli_op(1, 1); }
Matrix gate_y() { return pauli_op(2, 1); }
Matrix gate_z() { return pauli_op(3, 1); }

Matrix gate_sqrt_x() {
  Matrix m(2, 2);
  m << Complex(1, 0), Complex(0, -1), Complex(0, -1), Complex(1, 0);
  return kInvSqrt2 * m;
}

Matrix gate_sqrt_y() {
  Matrix m(2, 2);
  m << Complex(1, 0), Complex(-1, 0), Complex(1, 0), Complex(1, 0);
  return kInvSqrt2 * m;
}

Matrix gate_hadamard() {
  Matrix m(2, 2);
  m << 1, 1, 1, -1;
  return kInvSqrt2 * m;
}

Matrix gate_cz() {
  Matrix m = Matrix::Identity(4, 4);
  m(3, 3) = -1;
  return m;
}

Matrix gate_cnot() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1;
  return m;
}

Matrix gate_sqrt_iswap() {
  Matrix m = Matrix::Identity(4, 4);
  m(1, 1) = m(2, 2) = kInvSqrt2;
  m(1, 2) = m(2, 1) = Complex(0, -kInvSqrt2);
  return m;
}

Matrix z_rotation(double phi) {
  Matrix m = Matrix::Identity(2, 2);
  m(1, 1) = std::exp(Complex(0, phi));
  return m;
}

Matrix controlled_phase(double theta) {
  Matrix m = Matrix::Identity(4, 4);
  m(3, 3) = std::exp(Complex(0, theta));
  return m;
}

Matrix named_gate(const std::string& name, double angle) {
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (key == "i") return gate_identity(1);
  if (key == "x") return gate_x();
  if (key == "y") return gate_y();
  if (key == "z") return gate_z();
  if (key == "sx" || key == "sqrtx") return gate_sqrt_x();
  if (key == "sy" || key == "sqrty") return gate_sqrt_y();
  if (key == "h") return gate_hadamard();
  if (key == "cz") return gate_cz();
  if (key == "cnot") return gate_cnot();
  if (key == "sqiswap" || key == "sqrtiswap") return gate_sqrt_iswap();
  if (key == "zrot") return z_rotation(angle);
  if (key == "cphase") return controlled_phase(angle);
  throw ValidationError("unknown gate name '" + name + "'");
}

const std::vector<std::string>& named_gate_list() {
  static const std::vector<std::string> names = {
      "i",  "x",  "y",    "z",       "sx",   "sy",
      "h",  "cz", "cnot", "sqiswap", "zrot", "cphase"};
  return names;
}

}  // namespace chi
