#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chi/error_matrix.hpp"
#include "chi/process.hpp"
#include "chi/types.hpp"

namespace chi {

// Where the data-equivalent (gauge) part of the preparation/measurement
// split lives. Calibration data cannot tell a depolarizing-type deviation
// on the preparation side from the same deviation on the measurement side,
// so identification pins it by convention.
enum class DepolarizingSplit { kAllToMeasurement };

// State preparation and measurement modeled as channels around the gate:
// prep acts before the sequence, meas after.
struct SpamModel {
  ProcessMatrix chi_prep;
  ProcessMatrix chi_meas;
  DepolarizingSplit depolarizing_split = DepolarizingSplit::kAllToMeasurement;
};

// Hermitian, trace-preserving within tol, and chi_00 >= 0.5 on both sides.
void validate_spam_model(const SpamModel& spam, double tol = 1e-6);

SpamModel trivial_spam(int n_qubits);

// One calibration gate: its label, the unitary it implements, and the
// measured error matrix (ErrorAfter convention, reference = the unitary).
struct CalibrationGate {
  std::string label;
  Matrix unitary;
  ErrorMatrix measured;
};

struct CalibrationSet {
  std::vector<CalibrationGate> gates;
};

// Per-qubit tokens from {I, X, Y, sqrt X, sqrt Y} joined by a separator.
// Generated labels use the UTF-8 forms and the tensor sign; parsing also
// accepts "sX"/"sY" and '*' as separator.
Matrix calibration_unitary(const std::string& label);
std::vector<std::string> calibration_labels(int n_qubits);

enum class SpamForwardMode { kFirstOrder, kExact };

// What a tomography experiment reports for a gate whose true residual error
// is err_true, under the given SPAM. First-order mode adds the transported
// preparation deviation and the measurement deviation; exact mode composes
// the three channels.
ErrorMatrix spam_forward(const ErrorMatrix& err_true, const SpamModel& spam,
                         SpamForwardMode mode = SpamForwardMode::kFirstOrder);

// Perfect-gate calibration data over the full label set for n_qubits.
CalibrationSet synthetic_calibration(
    const SpamModel& spam, int n_qubits,
    SpamForwardMode mode = SpamForwardMode::kFirstOrder);

// Least-squares identification of (chi_prep, chi_meas) from calibration
// data, solved jointly over all gates via the pseudo-inverse. The
// data-equivalent directions (one commutant projector per Pauli sector) are
// assigned to chi_meas. residual, when given, receives the Frobenius misfit
// of the first-order model over the whole set.
SpamModel identify_spam(const CalibrationSet& cal, double* residual = nullptr);

// Same solve restricted to a seeded random subset (always keeping the
// identity gate). Throws when the subset leaves directions beyond the known
// gauge unresolved.
SpamModel identify_spam_subset(const CalibrationSet& cal,
                               std::uint64_t subset_seed,
                               std::size_t subset_size,
                               double* residual = nullptr);

enum class SpamSubtraction {
  kFull,             // remove both sides
  kMeasurementOnly,  // preparation negligible; ErrorAfter convention
  kPreparationOnly   // measurement negligible; ErrorBefore convention
};

// Removes the SPAM contribution from a measured error matrix at first
// order. Diagonal entries pushed slightly negative by the subtraction
// (above -1e-8) are clamped to zero; *clamped reports whether that fired.
ErrorMatrix subtract_spam(const ErrorMatrix& err_exp, const SpamModel& spam,
                          SpamSubtraction mode = SpamSubtraction::kFull,
                          bool* clamped = nullptr);

// F_exp / F_identity, clamped to [0, 1]; *clamped reports clamping.
double spam_fidelity_ratio(double f_exp, double f_identity,
                           bool* clamped = nullptr);

// Positivity is deliberately not enforced on identified models; this
// reports the evidence instead.
struct SpamValidity {
  double prep_min_eigenvalue = 0.0;
  double meas_min_eigenvalue = 0.0;
  bool positive(double tol = 1e-10) const {
    return prep_min_eigenvalue >= -tol && meas_min_eigenvalue >= -tol;
  }
};
SpamValidity spam_validity(const SpamModel& spam);

}  // namespace chi
