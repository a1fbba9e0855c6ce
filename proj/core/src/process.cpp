#include "chi/process.hpp"

#include <algorithm>
#include <cmath>

namespace chi {

namespace {

double clamp_unit_interval(double value, const char* what) {
  if (value < -1e-10 || value > 1.0 + 1e-10)
    throw NumericalError(std::string(what) + " = " + std::to_string(value) +
                         " outside [0, 1] beyond tolerance");
  return std::clamp(value, 0.0, 1.0);
}

double real_checked(Complex value, const char* what) {
  if (std::abs(value.imag()) > 1e-10)
    throw NumericalError(std::string(what) + " has imaginary residue " +
                         std::to_string(value.imag()));
  return value.real();
}

}  // namespace

void validate_density_matrix(const Matrix& rho, double tol) {
  if (rho.rows() != rho.cols())
    throw ValidationError("density matrix must be square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw ValidationError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - Complex(1, 0)) > tol)
    throw ValidationError("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -tol)
    throw ValidationError("density matrix has negative eigenvalue " +
                          std::to_string(min_ev));
}

void validate_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) throw ValidationError("unitary must be square");
  Matrix defect = u.adjoint() * u - Matrix::Identity(u.rows(), u.cols());
  double dev = defect.cwiseAbs().maxCoeff();
  if (dev > tol)
    throw ValidationError("matrix deviates from unitarity by " +
                          std::to_string(dev));
}

void validate_process_matrix(const ProcessMatrix& chi_mat, double tol) {
  const Matrix& m = chi_mat.m;
  if (m.rows() != m.cols())
    throw ValidationError("process matrix must be square");
  if (static_cast<std::size_t>(m.rows()) != pauli_count(chi_mat.n_qubits))
    throw ValidationError("process matrix size does not match qubit count");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol)
    throw ValidationError("process matrix is not Hermitian");
  double trace = m.trace().real();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  double min_ev = es.eigenvalues().minCoeff();
  if (min_ev < -tol * std::max(trace, 1e-300))
    throw ValidationError("process matrix has negative eigenvalue " +
                          std::to_string(min_ev));
}

ProcessMatrix identity_process(int n_qubits) {
  Eigen::Index size = static_cast<Eigen::Index>(pauli_count(n_qubits));
  ProcessMatrix chi_mat{n_qubits, Matrix::Zero(size, size)};
  chi_mat.m(0, 0) = 1.0;
  return chi_mat;
}

ProcessMatrix chi_from_unitary(const Matrix& u) {
  validate_unitary(u);
  int n = qubit_count_for_dim(u.rows());
  Vector coeffs = phase_fix(expand_in_pauli(u));
  return {n, Matrix(coeffs * coeffs.adjoint())};
}

ProcessMatrix chi_from_kraus(const std::vector<KrausTerm>& terms,
                             bool allow_non_trace_preserving) {
  if (terms.empty()) throw ValidationError("empty Kraus term list");
  const Eigen::Index d = terms.front().op.rows();
  int n = qubit_count_for_dim(d);
  Matrix completeness = Matrix::Zero(d, d);
  Eigen::Index size = static_cast<Eigen::Index>(pauli_count(n));
  Matrix m = Matrix::Zero(size, size);
  for (const KrausTerm& term : terms) {
    if (term.weight < 0)
      throw ValidationError("negative Kraus weight " +
                            std::to_string(term.weight));
    if (term.op.rows() != d || term.op.cols() != d)
      throw ValidationError("Kraus operators must share one square shape");
    Vector a = expand_in_pauli(term.op);
    m += term.weight * (a * a.adjoint());
    completeness += term.weight * (term.op.adjoint() * term.op);
  }
  double defect =
      (completeness - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (!allow_non_trace_preserving && defect > 1e-8)
    throw ValidationError("Kraus completeness sum deviates from identity by " +
                          std::to_string(defect) +
                          " (pass allow_non_trace_preserving to keep it)");
  return {n, std::move(m)};
}

Matrix apply_channel(const ProcessMatrix& chi_mat, const Matrix& rho,
                     bool validate_input) {
  Eigen::Index d = static_cast<Eigen::Index>(pauli_dim(chi_mat.n_qubits));
  if (rho.rows() != d || rho.cols() != d)
    throw ValidationError("state dimension does not match the channel");
  if (validate_input) validate_density_matrix(rho);
  const auto& basis = pauli_basis(chi_mat.n_qubits);
  Matrix out = Matrix::Zero(d, d);
  for (std::size_t n = 0; n < basis.size(); ++n) {
    Matrix left =
        pauli_reconstruct(chi_mat.m.col(static_cast<Eigen::Index>(n)),
                          chi_mat.n_qubits);
    out += left * rho * basis[n];
  }
  return out;
}

Matrix completeness_defect(const ProcessMatrix& chi_mat) {
  const int n = chi_mat.n_qubits;
  const std::size_t size = pauli_count(n);
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(size));
  for (std::size_t mm = 0; mm < size; ++mm) {
    for (std::size_t nn = 0; nn < size; ++nn) {
      // E_n^dag E_m = E_n E_m reduces to a phase times one basis element.
      PauliTerm term = pauli_product(nn, mm, n);
      acc[static_cast<Eigen::Index>(term.index)] +=
          chi_mat.m(static_cast<Eigen::Index>(mm),
                    static_cast<Eigen::Index>(nn)) *
          term.phase;
    }
  }
  acc[0] -= 1.0;
  return pauli_reconstruct(acc, n);
}

bool is_trace_preserving(const ProcessMatrix& chi_mat, double tol) {
  return completeness_defect(chi_mat).cwiseAbs().maxCoeff() <= tol;
}

double process_fidelity(const ProcessMatrix& chi_des,
                        const ProcessMatrix& chi_mat) {
  if (chi_des.n_qubits != chi_mat.n_qubits)
    throw ValidationError("qubit counts differ");
  Eigen::SelfAdjointEigenSolver<Matrix> es(chi_des.m, Eigen::EigenvaluesOnly);
  Eigen::Index top_idx = 0;
  es.eigenvalues().cwiseAbs().maxCoeff(&top_idx);
  double top = std::abs(es.eigenvalues()[top_idx]);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (i == top_idx) continue;
    if (std::abs(es.eigenvalues()[i]) > 1e-10 * std::max(top, 1.0))
      throw ValidationError(
          "reference process matrix is not rank-1; use uhlmann_fidelity");
  }
  Complex f = chi_des.m.cwiseProduct(chi_mat.m.transpose()).sum();
  return clamp_unit_interval(real_checked(f, "process fidelity"),
                             "process fidelity");
}

double average_fidelity_from_process(double f_process, int n_qubits) {
  double d = static_cast<double>(pauli_dim(n_qubits));
  return 1.0 - (1.0 - f_process) * d / (d + 1.0);
}

double process_fidelity_from_average(double f_average, int n_qubits) {
  double d = static_cast<double>(pauli_dim(n_qubits));
  return 1.0 - (1.0 - f_average) * (d + 1.0) / d;
}

double uhlmann_fidelity(const ProcessMatrix& a, const ProcessMatrix& b) {
  if (a.n_qubits != b.n_qubits) throw ValidationError("qubit counts differ");
  Matrix sqrt_a = matrix_sqrt_psd(a.m);
  Matrix inner = sqrt_a * b.m * sqrt_a;
  double tr = matrix_sqrt_psd(Matrix((inner + inner.adjoint()) / 2.0))
                  .trace()
                  .real();
  return clamp_unit_interval(tr * tr, "uhlmann fidelity");
}

Matrix matrix_sqrt_psd(const Matrix& m, double clip_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed in matrix_sqrt_psd");
  double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  Vector roots(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double ev = es.eigenvalues()[i];
    if (ev < -clip_tol * scale)
      throw NumericalError("matrix_sqrt_psd: eigenvalue " +
                           std::to_string(ev) + " below clipping range");
    roots[i] = Complex(std::sqrt(std::max(ev, 0.0)), 0);
  }
  return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace chi
