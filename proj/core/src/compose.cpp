#include "chi/compose.hpp"

#include <cstddef>

#include "chi/pauli.hpp"

namespace chi {

namespace {

void require_same_shape(const ProcessMatrix& a, const ProcessMatrix& b) {
  if (a.n_qubits != b.n_qubits || a.m.rows() != b.m.rows())
    throw ValidationError("process matrices have mismatched dimensions");
}

void require_composable(const ErrorMatrix& a, const ErrorMatrix& b) {
  require_same_shape(a.chi, b.chi);
  if (a.convention != ErrorConvention::ErrorAfter ||
      b.convention != ErrorConvention::ErrorAfter)
    throw ValidationError("error composition expects ErrorAfter convention");
  if ((a.reference_unitary - b.reference_unitary).cwiseAbs().maxCoeff() >
      1e-12)
    throw ValidationError(
        "error references differ; jump_over to a common frame first");
}

}  // namespace

Matrix pauli_transfer(const ProcessMatrix& chi_mat) {
  const int nq = chi_mat.n_qubits;
  const std::size_t sz = pauli_count(nq);
  Matrix r(static_cast<Eigen::Index>(sz), static_cast<Eigen::Index>(sz));
  // L(E_b) = sum_mn chi_mn E_m E_b E_n; the product E_m E_b E_n is a single
  // phased Pauli, so for fixed (a, b) only n = m*b*a survives the trace.
  for (std::size_t a = 0; a < sz; ++a) {
    for (std::size_t b = 0; b < sz; ++b) {
      Complex acc = 0;
      for (std::size_t m = 0; m < sz; ++m) {
        PauliTerm mb = pauli_product(m, b, nq);
        std::size_t n = pauli_product(mb.index, a, nq).index;
        PauliTerm mbn = pauli_product(mb.index, n, nq);
        acc += chi_mat.m(static_cast<Eigen::Index>(m),
                         static_cast<Eigen::Index>(n)) *
               (mb.phase * mbn.phase);
      }
      r(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  }
  return r;
}

ProcessMatrix chi_from_pauli_transfer(const Matrix& r, int n_qubits) {
  const std::size_t sz = pauli_count(n_qubits);
  if (r.rows() != static_cast<Eigen::Index>(sz) || r.cols() != r.rows())
    throw ValidationError("transfer matrix has the wrong dimension");
  Matrix out(r.rows(), r.cols());
  for (std::size_t m = 0; m < sz; ++m) {
    for (std::size_t n = 0; n < sz; ++n) {
      Complex acc = 0;
      for (std::size_t b = 0; b < sz; ++b) {
        PauliTerm mb = pauli_product(m, b, n_qubits);
        PauliTerm mbn = pauli_product(mb.index, n, n_qubits);
        acc += r(static_cast<Eigen::Index>(mbn.index),
                 static_cast<Eigen::Index>(b)) *
               std::conj(mb.phase * mbn.phase);
      }
      out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) =
          acc / static_cast<double>(sz);
    }
  }
  return {n_qubits, out};
}

ProcessMatrix compose_exact(const ProcessMatrix& second,
                            const ProcessMatrix& first) {
  require_same_shape(second, first);
  return chi_from_pauli_transfer(
      Matrix(pauli_transfer(second) * pauli_transfer(first)),
      first.n_qubits);
}

ErrorMatrix compose_errors_first_order(const ErrorMatrix& first,
                                       const ErrorMatrix& second) {
  require_composable(first, second);
  const Matrix& c1 = first.chi.m;
  const Matrix& c2 = second.chi.m;
  const Eigen::Index sz = c1.rows();
  const double f1 = first.fidelity();
  const double f2 = second.fidelity();

  Matrix out(sz, sz);
  double interference = 0.0;
  for (Eigen::Index n = 1; n < sz; ++n)
    interference += c1(0, n).imag() * c2(0, n).imag();
  out(0, 0) = Complex(f1 * f2 - 2.0 * interference, 0.0);
  for (Eigen::Index n = 1; n < sz; ++n)
    out(n, n) = f2 * c1(n, n) + f1 * c2(n, n) +
                2.0 * (c1(0, n).imag() * c2(0, n).imag());
  for (Eigen::Index m = 0; m < sz; ++m)
    for (Eigen::Index n = 0; n < sz; ++n)
      if (m != n) out(m, n) = f2 * c1(m, n) + f1 * c2(m, n);

  return {{first.chi.n_qubits, out}, ErrorConvention::ErrorAfter,
          first.reference_unitary};
}

ErrorMatrix compose_errors_additive(const ErrorMatrix& first,
                                    const ErrorMatrix& second) {
  require_composable(first, second);
  Matrix out = first.chi.m + second.chi.m;
  out(0, 0) -= 1.0;
  return {{first.chi.n_qubits, out}, ErrorConvention::ErrorAfter,
          first.reference_unitary};
}

double composed_fidelity_exact(const ErrorMatrix& first,
                               const ErrorMatrix& second) {
  require_same_shape(first.chi, second.chi);
  const Matrix& c1 = first.chi.m;
  const Matrix& c2 = second.chi.m;
  Complex acc = 0;
  for (Eigen::Index m = 0; m < c1.rows(); ++m)
    for (Eigen::Index n = 0; n < c1.cols(); ++n) acc += c1(m, n) * c2(m, n);
  if (std::abs(acc.imag()) > 1e-10)
    throw NumericalError("composed fidelity has imaginary residue");
  return acc.real();
}

ErrorMatrix jump_over(const ErrorMatrix& err, const Matrix& u) {
  if (err.convention != ErrorConvention::ErrorAfter)
    throw ValidationError("jump_over expects an error placed after its gate");
  if (u.rows() != static_cast<Eigen::Index>(pauli_dim(err.chi.n_qubits)))
    throw ValidationError("unitary dimension mismatch");
  Matrix w = w_matrix(u);
  // Row/column 0 of w are exact, so the corner element never moves.
  return {{err.chi.n_qubits, Matrix(w * err.chi.m * w.adjoint())},
          ErrorConvention::ErrorAfter,
          Matrix(u * err.reference_unitary)};
}

GateWithError make_perfect_gate(const Matrix& u) {
  int n = qubit_count_for_dim(u.rows());
  return {u, {identity_process(n), ErrorConvention::ErrorAfter, u}};
}

void validate_gate_with_error(const GateWithError& gate, double tol) {
  validate_error_matrix(gate.error, tol);
  if (gate.error.convention != ErrorConvention::ErrorAfter)
    throw ValidationError("gate errors must use the ErrorAfter convention");
  if ((gate.desired - gate.error.reference_unitary).cwiseAbs().maxCoeff() >
      1e-12)
    throw ValidationError("gate error is referenced to a different unitary");
}

GateWithError compose_gates(const GateWithError& first,
                            const GateWithError& second, ComposeMode mode) {
  // Only structural checks here: first-order composites re-entering as
  // inputs carry harmless O(infidelity^2) negative eigenvalues, so a strict
  // positivity validation would reject legitimate chains.
  for (const GateWithError* g : {&first, &second}) {
    if (g->error.convention != ErrorConvention::ErrorAfter)
      throw ValidationError("gate errors must use the ErrorAfter convention");
    if ((g->desired - g->error.reference_unitary).cwiseAbs().maxCoeff() >
        1e-12)
      throw ValidationError("gate error is referenced to a different unitary");
  }
  require_same_shape(first.error.chi, second.error.chi);

  ErrorMatrix moved = jump_over(first.error, second.desired);
  ErrorMatrix aligned{second.error.chi, ErrorConvention::ErrorAfter,
                      moved.reference_unitary};

  GateWithError out;
  out.desired = second.desired * first.desired;
  switch (mode) {
    case ComposeMode::kExact:
      out.error = {compose_exact(aligned.chi, moved.chi),
                   ErrorConvention::ErrorAfter, out.desired};
      break;
    case ComposeMode::kFirstOrder:
      out.error = compose_errors_first_order(moved, aligned);
      break;
    case ComposeMode::kFirstOrderAdditive:
      out.error = compose_errors_additive(moved, aligned);
      break;
  }
  out.error.reference_unitary = out.desired;
  return out;
}

}  // namespace chi
