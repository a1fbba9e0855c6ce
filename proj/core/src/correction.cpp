#include "chi/correction.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>

#include "chi/pauli.hpp"

namespace chi {

namespace {

// Sorted, deduplicated, and range-checked copy of the set. Index 0 is the
// identity coefficient and is never correctable.
std::vector<std::size_t> checked_set(const std::vector<std::size_t>& set,
                                     std::size_t n_coeffs) {
  if (set.empty())
    throw ValidationError("correctable_set must name at least one element");
  std::vector<std::size_t> out(set);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.front() == 0)
    throw ValidationError("index 0 (identity) is not a correctable direction");
  if (out.back() >= n_coeffs)
    throw ValidationError("correctable_set index " +
                          std::to_string(out.back()) +
                          " outside the coefficient range");
  return out;
}

double checked_fidelity(const ErrorMatrix& err) {
  double f = err.fidelity();
  if (f <= 1e-12)
    throw NumericalError("fidelity too small to normalize a correction");
  return f;
}

bool is_zero_plan(const CorrectionPlan& plan) {
  return plan.u_corr.size() == 0 || plan.u_corr.cwiseAbs().maxCoeff() == 0.0;
}

// First-order composition of two raw error channels adjacent in channel
// order (first acts first). The composer only accepts the after-gate
// labelling, but the arithmetic is convention-neutral, so relabel.
ProcessMatrix first_order_adjacent(const ProcessMatrix& first,
                                   const ProcessMatrix& second,
                                   const Matrix& reference, bool additive) {
  ErrorMatrix a{first, ErrorConvention::ErrorAfter, reference};
  ErrorMatrix b{second, ErrorConvention::ErrorAfter, reference};
  ErrorMatrix out =
      additive ? compose_errors_additive(a, b) : compose_errors_first_order(a, b);
  return out.chi;
}

}  // namespace

CorrectionPlan suggest_correction(
    const ErrorMatrix& err, const std::vector<std::size_t>& correctable_set) {
  const Matrix& m = err.chi.m;
  std::vector<std::size_t> set =
      checked_set(correctable_set, static_cast<std::size_t>(m.rows()));
  double f = checked_fidelity(err);

  CorrectionPlan plan;
  plan.u_corr = Vector::Zero(m.rows());
  plan.correctable_set = std::move(set);
  plan.placement = err.convention == ErrorConvention::ErrorAfter
                       ? CorrectionPlacement::kAfterGate
                       : CorrectionPlacement::kBeforeGate;
  for (std::size_t n : plan.correctable_set) {
    double im = m(static_cast<Eigen::Index>(n), 0).imag();
    plan.u_corr[static_cast<Eigen::Index>(n)] = Complex(0.0, -im / f);
    plan.predicted_gain += im * im / f;
  }
  return plan;
}

Matrix correction_unitary(const CorrectionPlan& plan) {
  Eigen::Index n_coeffs = plan.u_corr.size();
  auto dim = static_cast<Eigen::Index>(
      std::llround(std::sqrt(static_cast<double>(n_coeffs))));
  if (dim * dim != n_coeffs)
    throw ValidationError("u_corr length is not a square");
  int n_qubits = qubit_count_for_dim(dim);

  if (is_zero_plan(plan)) return Matrix::Identity(dim, dim);

  // H = sum_n (u_n / i) E_n; Hermitian iff every u_n is purely imaginary.
  Vector h_coeffs = plan.u_corr * Complex(0.0, -1.0);
  h_coeffs[0] = 0.0;
  Matrix h = pauli_reconstruct(h_coeffs, n_qubits);
  Matrix u = Matrix(Complex(0.0, 1.0) * h).exp();

  double defect = (u * u.adjoint() - Matrix::Identity(dim, dim))
                      .cwiseAbs()
                      .maxCoeff();
  if (defect > 1e-6)
    throw ValidationError(
        "correction too large to unitarize (unitarity defect " +
        std::to_string(defect) + ")");
  return u;
}

GateWithError apply_correction(const GateWithError& gate,
                               const CorrectionPlan& plan, ComposeMode mode) {
  if (plan.u_corr.size() != gate.error.chi.m.rows())
    throw ValidationError("plan and gate dimensions differ");
  bool after = plan.placement == CorrectionPlacement::kAfterGate;
  if (after != (gate.error.convention == ErrorConvention::ErrorAfter))
    throw ValidationError(
        "correction placement does not match the error convention; "
        "convert_convention first");
  if (is_zero_plan(plan)) return gate;

  ProcessMatrix corr = chi_from_unitary(correction_unitary(plan));
  // After-gate corrections act last in channel order; before-gate ones first.
  const ProcessMatrix& first = after ? gate.error.chi : corr;
  const ProcessMatrix& second = after ? corr : gate.error.chi;

  GateWithError out = gate;
  switch (mode) {
    case ComposeMode::kExact:
      out.error.chi = compose_exact(second, first);
      break;
    case ComposeMode::kFirstOrder:
      out.error.chi = first_order_adjacent(first, second,
                                           gate.error.reference_unitary, false);
      break;
    case ComposeMode::kFirstOrderAdditive:
      out.error.chi = first_order_adjacent(first, second,
                                           gate.error.reference_unitary, true);
      break;
  }
  return out;
}

CorrectionPlan iterate_correction(const ProcessMatrix& chi_mat,
                                  const Matrix& u_desired,
                                  const std::vector<std::size_t>& correctable_set,
                                  int max_iters, double tol) {
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be positive");
  std::vector<std::size_t> set = checked_set(
      correctable_set, static_cast<std::size_t>(chi_mat.m.rows()));

  Eigen::Index dim = u_desired.rows();
  ProcessMatrix current = chi_mat;
  Matrix u_prod = Matrix::Identity(dim, dim);
  double total_gain = 0.0;
  int applied = 0;

  for (int round = 0;; ++round) {
    ErrorMatrix err =
        to_error_matrix(current, u_desired, ErrorConvention::ErrorAfter);
    double residual = 0.0;
    for (std::size_t n : set)
      residual = std::max(
          residual, std::abs(err.chi.m(static_cast<Eigen::Index>(n), 0).imag()));
    if (residual <= tol) break;
    if (round == max_iters)
      throw NumericalError("correction iteration did not converge after " +
                           std::to_string(max_iters) +
                           " rounds (residual " + std::to_string(residual) +
                           ")");
    CorrectionPlan step = suggest_correction(err, set);
    Matrix u_step = correction_unitary(step);
    current = compose_exact(chi_from_unitary(u_step), current);
    u_prod = u_step * u_prod;
    total_gain += step.predicted_gain;
    ++applied;
  }

  CorrectionPlan plan;
  plan.u_corr = Vector::Zero(chi_mat.m.rows());
  plan.correctable_set = std::move(set);
  plan.predicted_gain = total_gain;
  plan.placement = CorrectionPlacement::kAfterGate;
  if (applied > 0) {
    // Principal-branch generator of the accumulated product. Components
    // outside the set (BCH leakage for non-commuting sets, O(angle^2)) are
    // dropped so the plan keeps its support invariant.
    Matrix log_u = u_prod.log();  // skew-Hermitian: i H
    Matrix h = Matrix((log_u - log_u.adjoint()) * Complex(0.0, -0.5));
    Vector h_coeffs = expand_in_pauli(h);
    for (std::size_t n : plan.correctable_set)
      plan.u_corr[static_cast<Eigen::Index>(n)] =
          Complex(0.0, h_coeffs[static_cast<Eigen::Index>(n)].real());
  }
  return plan;
}

CzPhaseCorrection cz_corrections(const ErrorMatrix& err, bool include_cz_angle) {
  if (err.chi.n_qubits != 2)
    throw ValidationError("cz_corrections expects a two-qubit error matrix");
  double f = checked_fidelity(err);

  // Canonical indices: IZ = 3, ZI = 12, ZZ = 15.
  double im_iz = err.chi.m(3, 0).imag();
  double im_zi = err.chi.m(12, 0).imag();
  double im_zz = err.chi.m(15, 0).imag();

  CzPhaseCorrection c;
  if (include_cz_angle) {
    c.phi_cz = -4.0 * im_zz / f;
    c.phi1 = 2.0 * (im_iz + im_zz) / f;
    c.phi2 = 2.0 * (im_zi + im_zz) / f;
    c.predicted_gain = (im_iz * im_iz + im_zi * im_zi + im_zz * im_zz) / f;
  } else {
    c.phi1 = 2.0 * im_iz / f;
    c.phi2 = 2.0 * im_zi / f;
    c.predicted_gain = (im_iz * im_iz + im_zi * im_zi) / f;
  }
  c.large_angle_warning = std::max({std::abs(c.phi1), std::abs(c.phi2),
                                    std::abs(c.phi_cz)}) > 0.5;
  return c;
}

Matrix cz_correction_unitary(const CzPhaseCorrection& c) {
  double phi3 = c.phi1 + c.phi2 + c.phi_cz;
  Complex global = std::exp(Complex(0.0, -(c.phi1 + c.phi2 + phi3) / 4.0));
  Matrix u = Matrix::Zero(4, 4);
  u(0, 0) = global;
  u(1, 1) = global * std::exp(Complex(0.0, c.phi1));
  u(2, 2) = global * std::exp(Complex(0.0, c.phi2));
  u(3, 3) = global * std::exp(Complex(0.0, phi3));
  return u;
}

}  // namespace chi
