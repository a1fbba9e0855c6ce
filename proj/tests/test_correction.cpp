#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "chi/compose.hpp"
#include "chi/correction.hpp"
#include "chi/error_matrix.hpp"
#include "chi/gates.hpp"
#include "chi/process.hpp"
#include "chi/rng.hpp"
#include "support.hpp"

using namespace chi;
using testsupport::max_abs;
using testsupport::max_abs_diff;

namespace {

// Zero-temperature relaxation channel, duration in units of T1.
ProcessMatrix relaxation_chi(double gamma_t) {
  double e = std::exp(-gamma_t);
  double eh = std::exp(-gamma_t / 2.0);
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = (1 + eh) * (1 + eh) / 4.0;
  m(3, 3) = (1 - eh) * (1 - eh) / 4.0;
  m(1, 1) = m(2, 2) = (1 - e) / 4.0;
  m(1, 2) = Complex(0, -1) * ((1 - e) / 4.0);
  m(2, 1) = std::conj(m(1, 2));
  m(0, 3) = m(3, 0) = (1 - e) / 4.0;
  return {1, m};
}

double max_column_im(const ProcessMatrix& chi_mat) {
  double worst = 0.0;
  for (Eigen::Index n = 1; n < chi_mat.m.rows(); ++n)
    worst = std::max(worst, std::abs(chi_mat.m(n, 0).imag()));
  return worst;
}

ErrorMatrix error_of(const Matrix& actual_unitary, const Matrix& desired,
                     ErrorConvention convention = ErrorConvention::ErrorAfter) {
  return to_error_matrix(chi_from_unitary(actual_unitary), desired, convention);
}

}  // namespace

TEST_SUITE("correction") {

TEST_CASE("identity error yields a null plan") {
  GateWithError gate = make_perfect_gate(gate_hadamard());
  CorrectionPlan plan = suggest_correction(gate.error, {1, 2, 3});

  CHECK(plan.u_corr.cwiseAbs().maxCoeff() == 0.0);
  CHECK(plan.predicted_gain == 0.0);
  CHECK(plan.placement == CorrectionPlacement::kAfterGate);
  CHECK(max_abs_diff(correction_unitary(plan), Matrix::Identity(2, 2)) == 0.0);

  GateWithError out = apply_correction(gate, plan, ComposeMode::kExact);
  CHECK(max_abs_diff(out.error.chi.m, gate.error.chi.m) == 0.0);
  CHECK(max_abs_diff(out.desired, gate.desired) == 0.0);
}

TEST_CASE("z rotation error is cancelled to first order") {
  double eps = 0.08;
  Matrix id = gate_identity(1);
  ErrorMatrix err = error_of(z_rotation(eps), id);

  CorrectionPlan plan = suggest_correction(err, {3});
  double t = std::tan(eps / 2.0);
  CHECK(plan.u_corr[1] == Complex(0, 0));
  CHECK(plan.u_corr[2] == Complex(0, 0));
  CHECK(plan.u_corr[3].real() == 0.0);
  CHECK(plan.u_corr[3].imag() == doctest::Approx(t).epsilon(1e-12));
  double half = eps / 2.0;
  CHECK(plan.predicted_gain ==
        doctest::Approx(std::sin(half) * std::sin(half)).epsilon(1e-12));

  // The realized unitary is the inverse rotation with angle 2 tan(eps/2).
  Matrix u_c = correction_unitary(plan);
  Matrix expected(2, 2);
  expected << std::exp(Complex(0, t)), 0, 0, std::exp(Complex(0, -t));
  CHECK(max_abs_diff(u_c, expected) < 1e-14);

  // Exact composition leaves the third-order residual delta = tan - angle.
  GateWithError gate{id, err};
  GateWithError out = apply_correction(gate, plan, ComposeMode::kExact);
  double delta = t - half;
  double f_new = out.error.fidelity();
  CHECK(f_new ==
        doctest::Approx(1.0 - std::sin(delta) * std::sin(delta)).epsilon(1e-12));
  CHECK(std::abs(out.error.chi.m(3, 0).imag()) ==
        doctest::Approx(std::sin(delta) * std::cos(delta)).epsilon(1e-6));

  GateWithError fo = apply_correction(gate, plan, ComposeMode::kFirstOrder);
  CHECK(std::abs(fo.error.fidelity() - f_new) < 1e-5);
}

TEST_CASE("small z error is cancelled below 1e-12") {
  Matrix id = gate_identity(1);
  ErrorMatrix err = error_of(z_rotation(1e-4), id);
  CorrectionPlan plan = suggest_correction(err, {1, 2, 3});
  GateWithError out =
      apply_correction(GateWithError{id, err}, plan, ComposeMode::kExact);
  CHECK(max_column_im(out.error.chi) < 1e-12);
  CHECK(out.error.fidelity() > 1.0 - 1e-15);
}

TEST_CASE("before-gate placement works in the rotated frame") {
  Matrix h = gate_hadamard();
  Matrix actual = z_rotation(1e-4) * h;
  ErrorMatrix err_b = error_of(actual, h, ErrorConvention::ErrorBefore);

  CorrectionPlan plan = suggest_correction(err_b, {1, 2, 3});
  CHECK(plan.placement == CorrectionPlacement::kBeforeGate);

  GateWithError out =
      apply_correction(GateWithError{h, err_b}, plan, ComposeMode::kExact);
  CHECK(out.error.convention == ErrorConvention::ErrorBefore);
  CHECK(max_column_im(out.error.chi) < 1e-12);

  // Same overall channel as composing the correction ahead of the raw gate.
  ProcessMatrix direct = compose_exact(
      chi_from_unitary(actual), chi_from_unitary(correction_unitary(plan)));
  CHECK(max_abs_diff(from_error_matrix(out.error).m, direct.m) < 1e-12);

  // Placement and convention must agree.
  ErrorMatrix err_a = error_of(actual, h, ErrorConvention::ErrorAfter);
  CHECK_THROWS_AS(
      apply_correction(GateWithError{h, err_a}, plan, ComposeMode::kExact),
      ValidationError);
}

TEST_CASE("decoherence-only error produces a null correction") {
  Matrix id = gate_identity(1);
  ErrorMatrix err =
      to_error_matrix(relaxation_chi(0.1), id, ErrorConvention::ErrorAfter);
  CorrectionPlan plan = suggest_correction(err, {1, 2, 3});
  CHECK(plan.u_corr.cwiseAbs().maxCoeff() == 0.0);
  CHECK(plan.predicted_gain == 0.0);

  GateWithError out =
      apply_correction(GateWithError{id, err}, plan, ComposeMode::kExact);
  CHECK(out.error.fidelity() == err.fidelity());
}

TEST_CASE("predicted gain tracks the exact gain when decoherence dominates") {
  Matrix id = gate_identity(1);

  ProcessMatrix chan =
      compose_exact(relaxation_chi(0.08), chi_from_unitary(z_rotation(0.02)));
  ErrorMatrix err = to_error_matrix(chan, id, ErrorConvention::ErrorAfter);
  double f0 = err.fidelity();
  REQUIRE(1.0 - f0 <= 0.05);

  CorrectionPlan plan = suggest_correction(err, {1, 2, 3});
  CHECK(plan.predicted_gain > 0.0);
  GateWithError out =
      apply_correction(GateWithError{id, err}, plan, ComposeMode::kExact);
  double gained = out.error.fidelity() - f0;
  CHECK(gained == doctest::Approx(plan.predicted_gain).epsilon(0.2));

  chi::RngStream rng(911, 0);
  for (int rep = 0; rep < 5; ++rep) {
    ProcessMatrix noisy =
        testsupport::random_near_identity_channel(rng, 1, 0.005, 0.05);
    ErrorMatrix e = to_error_matrix(noisy, id, ErrorConvention::ErrorAfter);
    REQUIRE(1.0 - e.fidelity() <= 0.05);
    CorrectionPlan p = suggest_correction(e, {1, 2, 3});
    if (p.predicted_gain < 1e-9) continue;  // nothing to correct this draw
    GateWithError o =
        apply_correction(GateWithError{id, e}, p, ComposeMode::kExact);
    double g = o.error.fidelity() - e.fidelity();
    CHECK(g == doctest::Approx(p.predicted_gain).epsilon(0.2));
  }
}

TEST_CASE("iterated correction tames a gross rotation") {
  Matrix id = gate_identity(1);
  ProcessMatrix chan = chi_from_unitary(z_rotation(0.8));

  CorrectionPlan plan = iterate_correction(chan, id, {3}, 5, 1e-10);
  CHECK(plan.u_corr[3].real() == 0.0);
  CHECK(plan.u_corr[3].imag() == doctest::Approx(0.4).epsilon(1e-9));
  double infid0 = 1.0 - std::cos(0.4) * std::cos(0.4);
  CHECK(plan.predicted_gain == doctest::Approx(infid0).epsilon(0.01));

  ProcessMatrix corrected =
      compose_exact(chi_from_unitary(correction_unitary(plan)), chan);
  ErrorMatrix err2 =
      to_error_matrix(corrected, id, ErrorConvention::ErrorAfter);
  CHECK(std::abs(err2.chi.m(3, 0).imag()) < 1e-9);
  CHECK(err2.fidelity() > 1.0 - 1e-12);

  CHECK_THROWS_AS(iterate_correction(chan, id, {3}, 1, 1e-10), NumericalError);

  // A gross rotation mixed with decoherence still reaches the floor.
  ProcessMatrix mixed =
      compose_exact(relaxation_chi(0.05), chi_from_unitary(z_rotation(0.3)));
  ErrorMatrix before =
      to_error_matrix(mixed, id, ErrorConvention::ErrorAfter);
  CorrectionPlan plan2 = iterate_correction(mixed, id, {3}, 8, 1e-9);
  ProcessMatrix fixed =
      compose_exact(chi_from_unitary(correction_unitary(plan2)), mixed);
  ErrorMatrix after =
      to_error_matrix(fixed, id, ErrorConvention::ErrorAfter);
  CHECK(std::abs(after.chi.m(3, 0).imag()) < 1e-9);
  CHECK(after.fidelity() > before.fidelity());

  // A small error needs a single round.
  ProcessMatrix tiny = chi_from_unitary(z_rotation(1e-5));
  CHECK_NOTHROW(iterate_correction(tiny, id, {3}, 1, 1e-12));
}

TEST_CASE("cz corrections recover injected phases") {
  Matrix cz = gate_cz();
  Matrix inject = Matrix::Zero(4, 4);
  inject(0, 0) = 1.0;
  inject(1, 1) = std::exp(Complex(0, 0.1));
  inject(2, 2) = std::exp(Complex(0, -0.05));
  inject(3, 3) = std::exp(Complex(0, 0.05));
  Matrix actual = inject * cz;
  ErrorMatrix err = error_of(actual, cz);

  CzPhaseCorrection c = cz_corrections(err);
  CHECK(c.phi1 == doctest::Approx(-0.1).epsilon(0.02));
  CHECK(c.phi2 == doctest::Approx(0.05).epsilon(0.02));
  CHECK(std::abs(c.phi_cz) < 2e-3);
  CHECK_FALSE(c.large_angle_warning);
  double f = err.fidelity();
  double expected_gain = (std::pow(err.chi.m(3, 0).imag(), 2) +
                          std::pow(err.chi.m(12, 0).imag(), 2) +
                          std::pow(err.chi.m(15, 0).imag(), 2)) /
                         f;
  CHECK(c.predicted_gain == doctest::Approx(expected_gain).epsilon(1e-14));

  // One round of the diagonal correction knocks the targeted elements down
  // to the cubic residue.
  Matrix u_c = cz_correction_unitary(c);
  ProcessMatrix corrected =
      compose_exact(chi_from_unitary(u_c), chi_from_unitary(actual));
  ErrorMatrix err2 =
      to_error_matrix(corrected, cz, ErrorConvention::ErrorAfter);
  for (Eigen::Index n : {3, 12, 15})
    CHECK(std::abs(err2.chi.m(n, 0).imag()) < 1e-3);

  // Iterating through the same directions reaches the numerical floor.
  CorrectionPlan plan =
      iterate_correction(chi_from_unitary(actual), cz, {3, 12, 15}, 6, 1e-12);
  ProcessMatrix floored = compose_exact(
      chi_from_unitary(correction_unitary(plan)), chi_from_unitary(actual));
  ErrorMatrix err3 =
      to_error_matrix(floored, cz, ErrorConvention::ErrorAfter);
  for (Eigen::Index n : {3, 12, 15})
    CHECK(std::abs(err3.chi.m(n, 0).imag()) < 1e-11);

  // Output does not depend on the error convention.
  CzPhaseCorrection cb = cz_corrections(convert_convention(err));
  CHECK(cb.phi1 == c.phi1);
  CHECK(cb.phi2 == c.phi2);
  CHECK(cb.phi_cz == c.phi_cz);

  // Diagonal corrections commute with the gate.
  CHECK(max_abs(Matrix(u_c * cz - cz * u_c)) == 0.0);
}

TEST_CASE("cz angle knob separates local and entangling corrections") {
  Matrix cz = gate_cz();
  double delta = 0.06;
  ErrorMatrix err = error_of(controlled_phase(std::numbers::pi + delta), cz);

  CzPhaseCorrection three = cz_corrections(err, true);
  CHECK(three.phi_cz == doctest::Approx(-delta).epsilon(0.02));
  CHECK(std::abs(three.phi1) < 1e-3);
  CHECK(std::abs(three.phi2) < 1e-3);

  CzPhaseCorrection two = cz_corrections(err, false);
  CHECK(two.phi_cz == 0.0);
  CHECK(two.phi1 == doctest::Approx(-delta / 2).epsilon(0.02));
  CHECK(two.phi2 == doctest::Approx(-delta / 2).epsilon(0.02));
  CHECK(two.predicted_gain < three.predicted_gain);

  ErrorMatrix clean = error_of(cz, cz);
  CzPhaseCorrection null = cz_corrections(clean);
  CHECK(null.phi1 == 0.0);
  CHECK(null.phi2 == 0.0);
  CHECK(null.phi_cz == 0.0);
  CHECK(null.predicted_gain == 0.0);
  CHECK_FALSE(null.large_angle_warning);

  Matrix big = Matrix::Identity(4, 4);
  big(1, 1) = std::exp(Complex(0, 0.8));
  CzPhaseCorrection loud = cz_corrections(error_of(Matrix(big * cz), cz));
  CHECK(loud.large_angle_warning);

  ErrorMatrix one_qubit = error_of(z_rotation(0.1), gate_identity(1));
  CHECK_THROWS_AS(cz_corrections(one_qubit), ValidationError);
}

TEST_CASE("full-set correction on a unitary error is second order") {
  chi::RngStream rng(912, 0);
  for (int rep = 0; rep < 8; ++rep) {
    int nq = 1 + rep % 2;
    Eigen::Index d = nq == 1 ? 2 : 4;
    Matrix h = testsupport::random_hermitian(rng, d);
    h *= 0.05 / h.cwiseAbs().maxCoeff();
    Matrix u_des = testsupport::random_unitary(rng, d);
    Matrix actual = testsupport::exp_i_hermitian(h) * u_des;
    ErrorMatrix err = error_of(actual, u_des);
    double infid = 1.0 - err.fidelity();

    std::vector<std::size_t> full;
    for (std::size_t n = 1; n < static_cast<std::size_t>(d * d); ++n)
      full.push_back(n);
    CorrectionPlan plan = suggest_correction(err, full);
    GateWithError out = apply_correction(GateWithError{u_des, err}, plan,
                                         ComposeMode::kExact);
    double residual = 1.0 - out.error.fidelity();
    CHECK(residual <= 10.0 * infid * infid + 1e-15);
    CHECK(std::abs((out.error.fidelity() - err.fidelity()) -
                   plan.predicted_gain) <= 10.0 * infid * infid + 1e-15);
  }
}

TEST_CASE("malformed inputs are rejected") {
  Matrix id = gate_identity(1);
  ErrorMatrix err = error_of(z_rotation(0.1), id);

  CHECK_THROWS_AS(suggest_correction(err, {}), ValidationError);
  CHECK_THROWS_AS(suggest_correction(err, {0}), ValidationError);
  CHECK_THROWS_AS(suggest_correction(err, {4}), ValidationError);

  CorrectionPlan bad;
  bad.u_corr = Vector::Zero(4);
  bad.u_corr[1] = 0.5;  // real coefficient: not a unitary direction
  bad.correctable_set = {1};
  CHECK_THROWS_AS(correction_unitary(bad), ValidationError);
  bad.u_corr[1] = 1e-8;  // small real parts pass the unitarity gate
  CHECK_NOTHROW(correction_unitary(bad));

  CorrectionPlan plan = suggest_correction(err, {3});
  GateWithError two_qubit = make_perfect_gate(gate_cz());
  CHECK_THROWS_AS(apply_correction(two_qubit, plan, ComposeMode::kExact),
                  ValidationError);

  ProcessMatrix chan = chi_from_unitary(z_rotation(0.1));
  CHECK_THROWS_AS(iterate_correction(chan, id, {3}, 0, 1e-10),
                  ValidationError);
  CHECK_THROWS_AS(iterate_correction(chan, id, {3}, 4, -1.0), ValidationError);

  // No overlap with the desired gate: the corner fidelity collapses.
  ErrorMatrix hopeless = error_of(gate_x(), id);
  CHECK_THROWS_AS(suggest_correction(hopeless, {1, 2, 3}), NumericalError);
}

}  // TEST_SUITE
