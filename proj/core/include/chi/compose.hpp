#pragma once

#include "chi/error_matrix.hpp"
#include "chi/process.hpp"
#include "chi/types.hpp"

namespace chi {

// Superoperator in the Pauli basis, R_ab = Tr(E_a L(E_b))/d. Channels
// compose by plain matrix product in this representation, which keeps the
// exact composition at O(d^6) instead of the naive O(d^8) contraction.
Matrix pauli_transfer(const ProcessMatrix& chi_mat);
ProcessMatrix chi_from_pauli_transfer(const Matrix& r, int n_qubits);

// chi of (second o first); arguments read right to left like operator
// composition. Contraction runs through the Pauli product phase table.
ProcessMatrix compose_exact(const ProcessMatrix& second,
                            const ProcessMatrix& first);

// First-order composition of two error channels in a shared frame:
// off-diagonals add weighted by the partner fidelity, diagonals pick up the
// interference of the imaginary top-row elements, and the corner drops by
// the same interference sum. Exchanging the arguments gives a bit-identical
// result. Callers must align references (jump_over) first; mismatched
// references or conventions are refused.
ErrorMatrix compose_errors_first_order(const ErrorMatrix& first,
                                       const ErrorMatrix& second);

// Cruder additive rule: chi1 + chi2 minus the identity process.
ErrorMatrix compose_errors_additive(const ErrorMatrix& first,
                                    const ErrorMatrix& second);

// Exact corner element of the composition, sum_mn chi1_mn chi2_mn. Symmetric
// under exchange bit for bit.
double composed_fidelity_exact(const ErrorMatrix& first,
                               const ErrorMatrix& second);

// Moves an error sitting after some gate past the next unitary u:
// chi -> W_(u) chi W_(u)^dag, reference -> u * reference. The corner element
// and the eigenvalue spectrum are unchanged.
ErrorMatrix jump_over(const ErrorMatrix& err, const Matrix& u);

enum class ComposeMode { kExact, kFirstOrder, kFirstOrderAdditive };

// A gate together with its residual error, always in the ErrorAfter
// convention with error.reference_unitary equal to desired.
struct GateWithError {
  Matrix desired;
  ErrorMatrix error;
};

GateWithError make_perfect_gate(const Matrix& u);
void validate_gate_with_error(const GateWithError& gate,
                              double tol = validation_tolerance());

// Composite of first then second: desired = U2 U1, error = err1 jumped over
// U2 and merged with err2 by the chosen mode.
GateWithError compose_gates(const GateWithError& first,
                            const GateWithError& second, ComposeMode mode);

}  // namespace chi
