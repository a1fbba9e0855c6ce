#pragma once

#include <limits>
#include <vector>

#include "chi/error_matrix.hpp"
#include "chi/process.hpp"
#include "chi/types.hpp"

namespace chi {

// One decoherence mechanism of the master equation
//   drho/dt = -i[H, rho] + sum_j rate_j (B rho B^dag - {B^dag B, rho} / 2).
// The rate carries the dimension (1/s); the jump operator is dimensionless.
struct LindbladChannel {
  double rate = 0.0;
  Matrix jump_operator;
  bool normalized = false;  // identity component of B already removed
};

struct ScheduleSegment {
  double duration = 0.0;  // seconds
  Matrix hamiltonian;     // angular frequency units (hbar = 1)
  std::vector<LindbladChannel> channels;
};

// Piecewise-constant control: a fixed Hamiltonian and fixed channels per
// segment.
struct GateSchedule {
  std::vector<ScheduleSegment> segments;

  double total_time() const;
  Eigen::Index dim() const;  // 0 when there are no segments
};

// Durations positive, Hamiltonians Hermitian within tol, rates non-negative,
// consistent dimensions.
void validate_schedule(const GateSchedule& schedule,
                       double tol = validation_tolerance());

// Time-ordered product of the segment exponentials exp(-i H_k dt_k). The dim
// argument is only consulted for an empty schedule (identity of that size).
Matrix schedule_unitary(const GateSchedule& schedule, Eigen::Index dim = 0);

// Vectorized (column-major) generator of one segment, acting on vec(rho):
// d vec(rho)/dt = L vec(rho). Dimension d^2 x d^2.
Matrix lindblad_generator(const ScheduleSegment& segment);

// Product of the exact segment exponentials exp(L_k dt_k), i.e. the channel
// as a superoperator on vec(rho).
Matrix schedule_superoperator(const GateSchedule& schedule,
                              Eigen::Index dim = 0);

// Exact master-equation propagation of a density matrix.
Matrix propagate_density(const GateSchedule& schedule, const Matrix& rho0);

// chi_mn = Tr[(conj(E_n) (x) E_m)^dag S] / d^2: the process matrix whose
// channel action matches the superoperator.
ProcessMatrix chi_from_superoperator(const Matrix& s, int n_qubits);

// Exact process matrix of the schedule (qubit dimensions only). n_qubits is
// only consulted for an empty schedule.
ProcessMatrix exact_channel_chi(const GateSchedule& schedule, int n_qubits = 0);

// B -> B - b_0 with the compensating Hamiltonian shift
// H_a = i (rate/2) (conj(b_0) B - b_0 B^dag) folded into each segment, which
// leaves the physical channel unchanged.
GateSchedule normalize_channels(const GateSchedule& schedule);

// First-order error matrix of the schedule: chi^I plus the midpoint-quadrature
// integral of rate * B(t) patterns transported to the end (ErrorAfter) or the
// start (ErrorBefore) of the gate. Channels are b_0-normalized first; the
// reference unitary therefore includes the compensating Hamiltonian shifts.
// The optional second-order patch adds chi(m,0) conj(chi(n,0)) to the
// interior.
ErrorMatrix first_order_error(const GateSchedule& schedule,
                              ErrorConvention convention,
                              bool second_order_patch = false);

// F ~ 1 - integral of rate * sum_{n != 0} |b_n|^2. Never reads the
// Hamiltonians, so it is bit-invariant under any change of H(t).
double first_order_fidelity(const GateSchedule& schedule);

// Closed-form single-qubit channels. cos_avg / sin_avg are moments of the
// accumulated random Z-rotation angle and may come from any noise model
// (exponential, Gaussian, 1/f, ...).
ProcessMatrix analytic_dephasing(double cos_avg, double sin_avg = 0.0);

// Finite-temperature relaxation over duration t: up/down rates satisfy
// 1/rate = T1 (1 + exp(+-E/T)). Pass e_over_t = infinity for zero
// temperature.
ProcessMatrix analytic_relaxation(
    double t, double t1,
    double e_over_t = std::numeric_limits<double>::infinity());

// Relaxation and symmetric pure dephasing acting together (the dephasing
// only reshuffles the II and ZZ elements).
ProcessMatrix analytic_combined(double t, double t1, double e_over_t,
                                double cos_avg);

// Leading order in t of the combined channel (dephasing kept exact).
ProcessMatrix analytic_short_time(double t, double t1, double e_over_t,
                                  double cos_avg);

// Ramsey fringe P(|1>) = 1/2 + (1/2) e^{-t/2T1} <cos phi> cos(phi_r), and the
// inverse that extracts <cos phi> from a measured probability.
double ramsey_signal(double t, double t1, double cos_avg, double phi_r);
double ramsey_cos_avg(double p_excited, double t, double t1, double phi_r);

}  // namespace chi
