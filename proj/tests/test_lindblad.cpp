#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "chi/error_matrix.hpp"
#include "chi/gates.hpp"
#include "chi/lindblad.hpp"
#include "chi/process.hpp"
#include "chi/rng.hpp"
#include "support.hpp"

using namespace chi;
using testsupport::max_abs;
using testsupport::max_abs_diff;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix lowering(Eigen::Index d = 2) {
  Matrix b = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k + 1 < d; ++k) b(k, k + 1) = 1.0;
  return b;
}

ScheduleSegment segment(double dt, const Matrix& h,
                        std::vector<LindbladChannel> channels = {}) {
  return {dt, h, std::move(channels)};
}

GateSchedule one_segment(double dt, const Matrix& h,
                         std::vector<LindbladChannel> channels = {}) {
  GateSchedule s;
  s.segments.push_back(segment(dt, h, std::move(channels)));
  return s;
}

Matrix pure_state(const Vector& psi) { return psi * psi.adjoint(); }

}  // namespace

TEST_SUITE("lindblad") {

TEST_CASE("free and unitary segments propagate exactly") {
  chi::RngStream rng(2001, 0);
  Matrix rho = testsupport::random_density(rng, 2);

  GateSchedule idle = one_segment(1.3, Matrix::Zero(2, 2));
  CHECK(max_abs_diff(propagate_density(idle, rho), rho) < 1e-12);

  Matrix h = 0.4 * pauli_op(1, 1) + 0.7 * pauli_op(3, 1);
  GateSchedule drive = one_segment(0.9, h);
  Matrix u = schedule_unitary(drive);
  CHECK(max_abs_diff(u, testsupport::exp_i_hermitian(Matrix(-0.9 * h))) <
        1e-13);
  CHECK(max_abs_diff(propagate_density(drive, rho), Matrix(u * rho * u.adjoint())) <
        1e-12);

  // Time ordering: two non-commuting segments multiply right to left.
  Matrix h2 = 1.1 * pauli_op(2, 1);
  GateSchedule two = drive;
  two.segments.push_back(segment(0.4, h2));
  Matrix expected =
      testsupport::exp_i_hermitian(Matrix(-0.4 * h2)) * u;
  CHECK(max_abs_diff(schedule_unitary(two), expected) < 1e-13);

  ProcessMatrix chan = exact_channel_chi(two);
  CHECK(max_abs_diff(chan.m, chi_from_unitary(expected).m) < 1e-12);

  CHECK(max_abs_diff(exact_channel_chi(GateSchedule{}, 1).m,
                     identity_process(1).m) == 0.0);
}

TEST_CASE("relaxation decays populations and coherences") {
  double t = 0.37;
  GateSchedule s =
      one_segment(t, Matrix::Zero(2, 2), {{1.0, lowering(), false}});

  Vector one(2);
  one << 0, 1;
  Matrix rho1 = propagate_density(s, pure_state(one));
  CHECK(rho1(1, 1).real() == doctest::Approx(std::exp(-t)).epsilon(1e-12));
  CHECK(rho1(0, 0).real() ==
        doctest::Approx(1.0 - std::exp(-t)).epsilon(1e-12));

  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  Matrix rho2 = propagate_density(s, pure_state(plus));
  CHECK(std::abs(rho2(0, 1)) ==
        doctest::Approx(0.5 * std::exp(-t / 2)).epsilon(1e-12));

  CHECK(max_abs_diff(exact_channel_chi(s).m,
                     analytic_relaxation(t, 1.0, kInf).m) < 1e-12);
}

TEST_CASE("dephasing decays coherences only") {
  double t_phi = 2.0, t = 0.8;
  GateSchedule s = one_segment(
      t, Matrix::Zero(2, 2), {{1.0 / (2.0 * t_phi), pauli_op(3, 1), false}});

  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  Matrix rho = propagate_density(s, pure_state(plus));
  CHECK(rho(0, 1).real() ==
        doctest::Approx(0.5 * std::exp(-t / t_phi)).epsilon(1e-12));
  CHECK(rho(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(max_abs_diff(exact_channel_chi(s).m,
                     analytic_dephasing(std::exp(-t / t_phi)).m) < 1e-12);
}

TEST_CASE("channel matches density propagation on random schedules") {
  chi::RngStream rng(2002, 0);
  for (int nq : {1, 2}) {
    Eigen::Index d = nq == 1 ? 2 : 4;
    GateSchedule s;
    for (int k = 0; k < 2; ++k) {
      Matrix h = testsupport::random_hermitian(rng, d);
      std::vector<LindbladChannel> channels;
      channels.push_back({0.05, testsupport::random_ginibre(rng, d, d), false});
      channels.push_back({0.08, testsupport::random_ginibre(rng, d, d), false});
      s.segments.push_back(segment(0.3 + 0.2 * k, h, std::move(channels)));
    }
    ProcessMatrix chan = exact_channel_chi(s);
    CHECK(is_trace_preserving(chan, 1e-10));
    for (int rep = 0; rep < 3; ++rep) {
      Matrix rho = testsupport::random_density(rng, d);
      CHECK(max_abs_diff(apply_channel(chan, rho),
                         propagate_density(s, rho)) < 1e-10);
    }
  }
}

TEST_CASE("finite-temperature table is the single-jump channel") {
  double t = 0.45, t1 = 1.7, e_over_t = 1.3, t_phi = 3.1;
  double gd = 1.0 / (t1 * (1.0 + std::exp(-e_over_t)));
  double gu = 1.0 / (t1 * (1.0 + std::exp(e_over_t)));
  ProcessMatrix table = analytic_relaxation(t, t1, e_over_t);

  // No-jump, one decay, one excitation: these three operators define the
  // closed form, and reproduce it to machine precision.
  Matrix a_no = Matrix::Zero(2, 2);
  a_no(0, 0) = std::exp(-gu * t / 2);
  a_no(1, 1) = std::exp(-gd * t / 2);
  Matrix a_dn = Matrix::Zero(2, 2);
  a_dn(0, 1) = std::sqrt(1.0 - std::exp(-gd * t));
  Matrix a_up = Matrix::Zero(2, 2);
  a_up(1, 0) = std::sqrt(1.0 - std::exp(-gu * t));
  ProcessMatrix via_kraus =
      chi_from_kraus({{1.0, a_no}, {1.0, a_dn}, {1.0, a_up}});
  CHECK(max_abs_diff(via_kraus.m, table.m) < 1e-14);

  // The master equation keeps the multi-jump paths the scenario picture
  // drops, so the two differ at second order in the rates and converge
  // quadratically as the interval shrinks.
  GateSchedule rel = one_segment(t, Matrix::Zero(2, 2),
                                 {{gd, lowering(), false},
                                  {gu, Matrix(lowering().adjoint()), false}});
  double gap = max_abs_diff(exact_channel_chi(rel).m, table.m);
  CHECK(gap < gu * gd * t * t);
  GateSchedule rel_short = rel;
  rel_short.segments.front().duration = t / 32;
  double gap_short = max_abs_diff(exact_channel_chi(rel_short).m,
                                  analytic_relaxation(t / 32, t1, e_over_t).m);
  CHECK(gap_short < gap / 500.0);

  // Combined table: a phase-flip pair composed with the three scenarios.
  double c = std::exp(-t / t_phi);
  Matrix k_keep = std::sqrt((1.0 + c) / 2.0) * Matrix::Identity(2, 2);
  Matrix k_flip = std::sqrt((1.0 - c) / 2.0) * pauli_op(3, 1);
  std::vector<KrausTerm> product_terms;
  for (const Matrix& deph : {k_keep, k_flip})
    for (const Matrix& relax : {a_no, a_dn, a_up})
      product_terms.push_back({1.0, Matrix(deph * relax)});
  CHECK(max_abs_diff(chi_from_kraus(product_terms).m,
                     analytic_combined(t, t1, e_over_t, c).m) < 1e-14);

  // At zero temperature every scenario is exact, so the master equation
  // agrees with the tables to machine precision.
  GateSchedule zero_t = one_segment(
      t, Matrix::Zero(2, 2),
      {{1.0 / t1, lowering(), false},
       {1.0 / (2.0 * t_phi), pauli_op(3, 1), false}});
  CHECK(max_abs_diff(exact_channel_chi(zero_t).m,
                     analytic_combined(t, t1, kInf, c).m) < 1e-12);
  CHECK(max_abs_diff(analytic_relaxation(t, t1, kInf).m,
                     analytic_combined(t, t1, kInf, 1.0).m) < 1e-15);
}

TEST_CASE("analytic channels expose the documented structure") {
  double c = std::exp(-0.2) * std::cos(0.1);
  double sn = std::exp(-0.2) * std::sin(0.1);
  ProcessMatrix deph = analytic_dephasing(c, sn);
  validate_process_matrix(deph);
  CHECK(is_trace_preserving(deph, 1e-12));
  CHECK((deph.m(0, 3) == Complex(0.0, sn / 2.0)));
  CHECK(deph.m(3, 3).real() ==
        doctest::Approx((1.0 - c) / 2.0).epsilon(1e-15));

  CHECK_THROWS_AS(analytic_dephasing(1.2), ValidationError);
  CHECK_THROWS_AS(analytic_dephasing(0.9, 0.9), ValidationError);
  CHECK_THROWS_AS(analytic_relaxation(-0.1, 1.0), ValidationError);
  CHECK_THROWS_AS(analytic_relaxation(0.1, 0.0), ValidationError);

  // Short-time expansion: linear terms exact, quadratic ones dropped.
  double t = 0.01, t1 = 1.0, t_phi = 2.0, eot = 0.8;
  double cos_avg = std::exp(-t / t_phi);
  ProcessMatrix full = analytic_combined(t, t1, eot, cos_avg);
  ProcessMatrix shrt = analytic_short_time(t, t1, eot, cos_avg);
  double rel_tol = 2.0 * t / std::min(t1, t_phi);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (std::abs(full.m(i, j)) < 1e-30) continue;
      CHECK(std::abs(shrt.m(i, j) - full.m(i, j)) <=
            rel_tol * std::abs(full.m(i, j)));
    }
  CHECK((shrt.m(1, 2) ==
         Complex(0.0, -(t / (4.0 * t1)) * std::tanh(eot / 2.0))));
  CHECK(shrt.m(0, 3).real() ==
        doctest::Approx((t / (4.0 * t1)) * std::tanh(eot / 2.0)).epsilon(1e-15));
}

TEST_CASE("ramsey fringe and its inverse") {
  CHECK(ramsey_signal(0.0, 1.0, 1.0, 0.0) == 1.0);
  double p = ramsey_signal(0.6, 1.4, 0.73, 0.4);
  CHECK(ramsey_cos_avg(p, 0.6, 1.4, 0.4) == doctest::Approx(0.73).epsilon(1e-12));
  CHECK_THROWS_AS(ramsey_cos_avg(0.5, 0.6, 1.4, std::numbers::pi / 2.0),
                  ValidationError);

  // No relaxation, exponential dephasing.
  double t = 0.5, t_phi = 1.1, phi_r = 0.3;
  GateSchedule s = one_segment(
      t, Matrix::Zero(2, 2), {{1.0 / (2.0 * t_phi), pauli_op(3, 1), false}});
  Matrix x_half = testsupport::exp_i_hermitian(
      Matrix(-std::numbers::pi / 4.0 * pauli_op(1, 1)));
  Matrix axis = testsupport::exp_i_hermitian(Matrix(
      -std::numbers::pi / 4.0 *
      (std::cos(phi_r) * pauli_op(1, 1) + std::sin(phi_r) * pauli_op(2, 1))));
  Vector zero(2);
  zero << 1, 0;
  Matrix rho = pure_state(Vector(x_half * zero));
  rho = propagate_density(s, rho);
  rho = axis * rho * axis.adjoint();
  double p1 = rho(1, 1).real();
  double huge_t1 = 1e12;  // relaxation-free limit
  CHECK(p1 == doctest::Approx(ramsey_signal(t, huge_t1, std::exp(-t / t_phi),
                                            phi_r)).epsilon(1e-9));
}

TEST_CASE("random controlled-phase angle inflates the identity corner") {
  double sigma = 0.05;
  Matrix up = controlled_phase(std::numbers::pi + sigma);
  Matrix dn = controlled_phase(std::numbers::pi - sigma);
  Matrix averaged = 0.5 * (chi_from_unitary(up).m + chi_from_unitary(dn).m);
  double bump = (averaged(0, 0) - chi_from_unitary(gate_cz()).m(0, 0)).real();
  CHECK(bump == doctest::Approx(3.0 / 8.0 * (1.0 - std::cos(sigma)))
                    .epsilon(1e-10));
  CHECK(std::abs(bump - (3.0 / 16.0) * sigma * sigma) < std::pow(sigma, 4));
}

TEST_CASE("first-order dephasing pattern is linear in the rate") {
  double t_phi = 100.0, t = 1.0;
  double gamma_t = t / (2.0 * t_phi);
  GateSchedule s = one_segment(
      t, Matrix::Zero(2, 2), {{1.0 / (2.0 * t_phi), pauli_op(3, 1), false}});

  ErrorMatrix err = first_order_error(s, ErrorConvention::ErrorAfter);
  CHECK(err.chi.m(3, 3).real() == doctest::Approx(gamma_t).epsilon(1e-13));
  CHECK(err.fidelity() == doctest::Approx(1.0 - gamma_t).epsilon(1e-13));
  CHECK(first_order_fidelity(s) == doctest::Approx(1.0 - gamma_t).epsilon(1e-14));

  ProcessMatrix exact = exact_channel_chi(s);
  CHECK(max_abs_diff(err.chi.m, exact.m) <= 2.0 * gamma_t * gamma_t);

  // Zero rates collapse to the identity pattern.
  GateSchedule idle = one_segment(t, Matrix::Zero(2, 2),
                                  {{0.0, pauli_op(3, 1), false}});
  CHECK(max_abs_diff(first_order_error(idle, ErrorConvention::ErrorAfter).chi.m,
                     identity_process(1).m) == 0.0);
}

TEST_CASE("two-qubit infidelity adds per qubit and channel") {
  double t = 0.3, t1a = 40.0, t1b = 55.0, tpa = 70.0, tpb = 90.0;
  Matrix id2 = Matrix::Identity(2, 2);
  Matrix h = Matrix::Zero(4, 4);
  h(3, 3) = 2.1;  // arbitrary controlled-phase drive
  std::vector<LindbladChannel> channels = {
      {1.0 / t1a, Eigen::kroneckerProduct(lowering(), id2).eval(), false},
      {1.0 / t1b, Eigen::kroneckerProduct(id2, lowering()).eval(), false},
      {1.0 / (2.0 * tpa), Eigen::kroneckerProduct(pauli_op(3, 1), id2).eval(),
       false},
      {1.0 / (2.0 * tpb), Eigen::kroneckerProduct(id2, pauli_op(3, 1)).eval(),
       false}};
  GateSchedule s = one_segment(t, h, channels);

  double expected = t / (2.0 * t1a) + t / (2.0 * t1b) + t / (2.0 * tpa) +
                    t / (2.0 * tpb);
  double f = first_order_fidelity(s);
  CHECK(std::abs((1.0 - f) - expected) < 1e-14);

  // Bit-invariant under any Hamiltonian change.
  chi::RngStream rng(2003, 0);
  GateSchedule s2 = s;
  s2.segments.front().hamiltonian += testsupport::random_hermitian(rng, 4);
  CHECK(first_order_fidelity(s2) == f);

  ErrorMatrix err = first_order_error(s, ErrorConvention::ErrorAfter);
  CHECK(std::abs(err.fidelity() - f) < 1e-12);
}

TEST_CASE("transport carries patterns across later segments") {
  double t_phi = 50.0, t1 = 1.0;
  double gamma_t = t1 / (2.0 * t_phi);
  GateSchedule s = one_segment(
      t1, Matrix::Zero(2, 2), {{1.0 / (2.0 * t_phi), pauli_op(3, 1), false}});
  // Second segment rotates Z into X (Hadamard axis, angle pi).
  Matrix axis = (pauli_op(1, 1) + pauli_op(3, 1)) / std::sqrt(2.0);
  s.segments.push_back(segment(1.0, Matrix(std::numbers::pi / 2.0 * axis)));

  ErrorMatrix after = first_order_error(s, ErrorConvention::ErrorAfter);
  CHECK(after.chi.m(1, 1).real() == doctest::Approx(gamma_t).epsilon(1e-9));
  CHECK(std::abs(after.chi.m(3, 3)) < 1e-12);

  ErrorMatrix before = first_order_error(s, ErrorConvention::ErrorBefore);
  CHECK(before.chi.m(3, 3).real() == doctest::Approx(gamma_t).epsilon(1e-9));
  CHECK(std::abs(before.chi.m(1, 1)) < 1e-12);

  CHECK(max_abs_diff(convert_convention(before).chi.m, after.chi.m) < 1e-12);

  ErrorMatrix from_exact = to_error_matrix(
      exact_channel_chi(s), after.reference_unitary,
      ErrorConvention::ErrorAfter);
  CHECK(max_abs_diff(from_exact.chi.m, after.chi.m) <=
        2.0 * gamma_t * gamma_t);

  // The patched variant completes the rank-1 coherent interior.
  ErrorMatrix patched =
      first_order_error(s, ErrorConvention::ErrorAfter, true);
  for (Eigen::Index m = 1; m < 4; ++m)
    for (Eigen::Index n = 1; n < 4; ++n)
      CHECK((patched.chi.m(m, n) - after.chi.m(m, n) ==
             after.chi.m(m, 0) * std::conj(after.chi.m(n, 0))));
}

TEST_CASE("identity-component removal compensates the Hamiltonian") {
  double t = 0.6;
  Matrix skew = lowering() + 0.3 * Matrix::Identity(2, 2);
  GateSchedule s = one_segment(t, Matrix(0.4 * pauli_op(1, 1)),
                               {{0.25, skew, false}});

  GateSchedule norm = normalize_channels(s);
  CHECK(norm.segments.front().channels.front().normalized);
  CHECK(std::abs(norm.segments.front().channels.front().jump_operator.trace()) <
        1e-14);
  CHECK(max_abs_diff(exact_channel_chi(norm).m, exact_channel_chi(s).m) <
        1e-10);
}

TEST_CASE("three-level systems propagate without a pauli basis") {
  double t = 0.7;
  Matrix b = Matrix::Zero(3, 3);
  b(1, 2) = 1.0;
  GateSchedule s = one_segment(t, Matrix::Zero(3, 3), {{1.0, b, false}});
  Matrix rho0 = Matrix::Zero(3, 3);
  rho0(2, 2) = 1.0;
  Matrix rho = propagate_density(s, rho0);
  CHECK(rho(2, 2).real() == doctest::Approx(std::exp(-t)).epsilon(1e-12));
  CHECK(rho(1, 1).real() == doctest::Approx(1.0 - std::exp(-t)).epsilon(1e-12));
  CHECK_THROWS_AS(exact_channel_chi(s), ValidationError);
}

TEST_CASE("malformed schedules are rejected") {
  Matrix z = pauli_op(3, 1);
  GateSchedule bad = one_segment(-1.0, Matrix::Zero(2, 2));
  CHECK_THROWS_AS(validate_schedule(bad), ValidationError);

  Matrix skew = Matrix::Zero(2, 2);
  skew(0, 1) = 1.0;
  CHECK_THROWS_AS(validate_schedule(one_segment(1.0, skew)), ValidationError);

  GateSchedule neg_rate = one_segment(1.0, Matrix::Zero(2, 2), {{-0.1, z, false}});
  CHECK_THROWS_AS(validate_schedule(neg_rate), ValidationError);

  GateSchedule mismatch =
      one_segment(1.0, Matrix::Zero(2, 2), {{0.1, Matrix::Zero(4, 4), false}});
  CHECK_THROWS_AS(validate_schedule(mismatch), ValidationError);

  CHECK_THROWS_AS(first_order_error(GateSchedule{}, ErrorConvention::ErrorAfter),
                  ValidationError);
  CHECK_THROWS_AS(exact_channel_chi(GateSchedule{}), ValidationError);

  GateSchedule ok = one_segment(1.0, Matrix::Zero(2, 2));
  Matrix rho4 = Matrix::Identity(4, 4) / 4.0;
  CHECK_THROWS_AS(propagate_density(ok, rho4), ValidationError);
  Matrix not_density = 2.0 * Matrix::Identity(2, 2);
  CHECK_THROWS_AS(propagate_density(ok, not_density), ValidationError);
}

}  // TEST_SUITE
