#pragma once

#include <vector>

#include "chi/process.hpp"
#include "chi/types.hpp"

namespace chi {

// Whether the residual error channel is factored after or before the
// reference unitary: channel = err o U (after) or channel = U o err (before).
enum class ErrorConvention { ErrorAfter, ErrorBefore };

struct ErrorMatrix {
  ProcessMatrix chi;
  ErrorConvention convention = ErrorConvention::ErrorAfter;
  Matrix reference_unitary;

  // chi(0,0): the process fidelity, identical in both conventions.
  double fidelity() const;
};

void validate_error_matrix(const ErrorMatrix& err,
                           double tol = validation_tolerance());

// W_(U),mn = Tr(E_m^dag U E_n U^dag)/d. Unitary change of Pauli frame.
// Row 0 and column 0 equal e_0 identically (Tr E_n = 0 for n > 0), and are
// stored exactly so conjugation never perturbs the (0,0) element.
Matrix w_matrix(const Matrix& u);

ErrorMatrix to_error_matrix(const ProcessMatrix& chi_mat,
                            const Matrix& u_desired,
                            ErrorConvention convention);
// Inverse of to_error_matrix: the raw channel chi.
ProcessMatrix from_error_matrix(const ErrorMatrix& err);
// Toggles between the two factorization conventions via W conjugation.
ErrorMatrix convert_convention(const ErrorMatrix& err);

// chi = sum_k w_k a^(k) a^(k)dag with descending weights; operators are the
// reconstructed A_k with the dominant coefficient rotated real positive.
struct KrausDecomposition {
  std::vector<double> weights;
  std::vector<Vector> coefficients;
  std::vector<Matrix> operators;
};
KrausDecomposition kraus_decompose(const ProcessMatrix& chi_mat);

// First-order unitary error: u_0 = 1, u_n = i Im(chi(n,0)) / chi(0,0).
Vector extract_unitary_error(const ErrorMatrix& err);

// kLeadingKraus reconstructs the dominant Kraus term from the first column
// (weights lambda_0 = F / (1 - sum_{n>0} |chi(0,n)|^2)); kColumnProduct is
// the cheaper chi(m,0) chi(0,n)^* interior approximation.
enum class CoherentSplitVariant { kLeadingKraus, kColumnProduct };

struct CoherentSplit {
  ProcessMatrix coherent;
  ProcessMatrix decoherent;
  double unitary_error;      // sum_{n>0} |u_n|^2
  double decoherence_error;  // 1 - lambda_0
  bool low_fidelity_warning = false;  // set when 1 - F > 0.2
};
CoherentSplit coherent_split(
    const ErrorMatrix& err,
    CoherentSplitVariant variant = CoherentSplitVariant::kLeadingKraus);

}  // namespace chi
