#pragma once

#include <vector>

#include "chi/pauli.hpp"
#include "chi/types.hpp"

namespace chi {

// Process matrix in the Pauli basis: rho_out = sum_mn m(m,n) E_m rho E_n^dag.
// Hermitian d^2 x d^2; positive semidefinite and unit trace for physical
// trace-preserving channels.
struct ProcessMatrix {
  int n_qubits = 0;
  Matrix m;

  Eigen::Index dim() const { return m.rows(); }
};

void validate_density_matrix(const Matrix& rho,
                             double tol = validation_tolerance());
void validate_unitary(const Matrix& u, double tol = validation_tolerance());

// Hermiticity within tol (absolute) and min eigenvalue >= -tol * trace.
void validate_process_matrix(const ProcessMatrix& chi_mat,
                             double tol = validation_tolerance());

// chi of the identity channel: 1 in the (0,0) slot, zero elsewhere.
ProcessMatrix identity_process(int n_qubits);

// Rank-1 chi of a unitary, phase-fixed so the (0,0) element is real.
ProcessMatrix chi_from_unitary(const Matrix& u);

struct KrausTerm {
  double weight;  // non-negative
  Matrix op;
};

// chi = sum_k w_k a^(k) a^(k)^dag with a^(k) the Pauli expansion of op_k.
// Completeness sum_k w_k A_k^dag A_k = 1 is enforced within 1e-8 unless
// allow_non_trace_preserving is set.
ProcessMatrix chi_from_kraus(const std::vector<KrausTerm>& terms,
                             bool allow_non_trace_preserving = false);

Matrix apply_channel(const ProcessMatrix& chi_mat, const Matrix& rho,
                     bool validate_input = true);

// sum_mn m(m,n) E_n^dag E_m - 1, assembled from the digit-wise product table.
Matrix completeness_defect(const ProcessMatrix& chi_mat);
bool is_trace_preserving(const ProcessMatrix& chi_mat, double tol = 1e-10);

// Tr(chi_des * chi); chi_des must be rank-1 (use uhlmann_fidelity otherwise).
double process_fidelity(const ProcessMatrix& chi_des,
                        const ProcessMatrix& chi_mat);
double average_fidelity_from_process(double f_process, int n_qubits);
double process_fidelity_from_average(double f_average, int n_qubits);

// (Tr sqrt(sqrt(a) b sqrt(a)))^2; order-symmetric generalization of
// process_fidelity to non-rank-1 references.
double uhlmann_fidelity(const ProcessMatrix& a, const ProcessMatrix& b);

// Hermitian square root; eigenvalues in [-clip_tol * scale, 0) are clipped to
// zero, anything lower raises NumericalError.
Matrix matrix_sqrt_psd(const Matrix& m, double clip_tol = 1e-10);

}  // namespace chi
