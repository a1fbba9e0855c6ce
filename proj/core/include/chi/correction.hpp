#pragma once

#include <cstddef>
#include <vector>

#include "chi/compose.hpp"
#include "chi/error_matrix.hpp"
#include "chi/process.hpp"
#include "chi/types.hpp"

namespace chi {

enum class CorrectionPlacement { kAfterGate, kBeforeGate };

// Small unitary correction stored through its generator: the realized unitary
// is exp(i H) with H = sum_{n>0} (u_corr[n] / i) E_n, so for small corrections
// u_corr matches the Pauli expansion of the unitary to first order. Entry 0 is
// kept at zero (the identity coefficient is implied); support is restricted to
// correctable_set.
struct CorrectionPlan {
  Vector u_corr;
  std::vector<std::size_t> correctable_set;
  double predicted_gain = 0.0;
  CorrectionPlacement placement = CorrectionPlacement::kAfterGate;
};

// Z-phase corrections for a CZ-like gate: diag(1, e^{i phi1}, e^{i phi2},
// e^{i phi3}) with phi3 = phi1 + phi2 + phi_cz, times the global phase
// exp(-i (phi1 + phi2 + phi3) / 4) that keeps the identity coefficient real
// to first order. phi1 phases |01>, phi2 phases |10>.
struct CzPhaseCorrection {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi_cz = 0.0;
  double predicted_gain = 0.0;
  bool large_angle_warning = false;  // any |angle| > 0.5 rad
};

// u_corr[n] = -i Im(chi_err(n,0)) / F for n in correctable_set, cancelling the
// imaginary part of the left column to first order. predicted_gain is
// sum_set Im(chi_err(n,0))^2 / F. Placement follows err.convention. Throws
// ValidationError for an empty set or indices outside [1, 4^n).
CorrectionPlan suggest_correction(const ErrorMatrix& err,
                                  const std::vector<std::size_t>& correctable_set);

// exp(i H) for the plan's generator. Exactly unitary when the coefficients are
// purely imaginary; throws ValidationError if the result strays from unitarity
// by more than 1e-6 (coefficients with large real parts are not realizable in
// this form).
Matrix correction_unitary(const CorrectionPlan& plan);

// Folds the correction unitary into the gate's error matrix on the side given
// by the plan's placement. The desired unitary and the error convention are
// unchanged. A plan whose placement does not match the error convention is
// rejected (convert_convention first).
GateWithError apply_correction(const GateWithError& gate,
                               const CorrectionPlan& plan, ComposeMode mode);

// Fixed-point loop: estimate via suggest_correction, fold the correction into
// the channel exactly, repeat until max_{n in set} |Im(chi_err(n,0))| <= tol.
// Returns the accumulated plan, i.e. the generator of the product of the
// per-round unitaries (principal log, components outside the set dropped).
// Throws NumericalError carrying the residual if max_iters rounds do not
// reach tol.
CorrectionPlan iterate_correction(const ProcessMatrix& chi_mat,
                                  const Matrix& u_desired,
                                  const std::vector<std::size_t>& correctable_set,
                                  int max_iters, double tol);

// Phase corrections for a two-qubit error matrix of a CZ-like gate. With the
// CZ-angle knob enabled the three angles cancel Im(chi_err) at IZ, ZI and ZZ;
// with it disabled phi_cz = 0 and only the IZ and ZI elements are cancelled.
// The output is the same for either error convention because the relevant
// Paulis commute with CZ.
CzPhaseCorrection cz_corrections(const ErrorMatrix& err,
                                 bool include_cz_angle = true);

// The 4x4 diagonal correction unitary described on CzPhaseCorrection.
Matrix cz_correction_unitary(const CzPhaseCorrection& c);

}  // namespace chi
