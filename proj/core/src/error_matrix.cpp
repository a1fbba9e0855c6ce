#include "chi/error_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace chi {

namespace {

// Columns n of the transfer matrix are the Pauli expansion of op(E_n).
template <typename F>
Matrix transfer_matrix(int n_qubits, F&& op) {
  const auto& basis = pauli_basis(n_qubits);
  Matrix v(static_cast<Eigen::Index>(basis.size()),
           static_cast<Eigen::Index>(basis.size()));
  for (std::size_t n = 0; n < basis.size(); ++n)
    v.col(static_cast<Eigen::Index>(n)) = expand_in_pauli(op(basis[n]));
  return v;
}

}  // namespace

double ErrorMatrix::fidelity() const {
  Complex f = chi.m(0, 0);
  if (std::abs(f.imag()) > 1e-12)
    throw NumericalError("error-matrix fidelity has imaginary residue " +
                         std::to_string(f.imag()));
  return f.real();
}

void validate_error_matrix(const ErrorMatrix& err, double tol) {
  validate_process_matrix(err.chi, tol);
  validate_unitary(err.reference_unitary, tol);
  if (err.reference_unitary.rows() !=
      static_cast<Eigen::Index>(pauli_dim(err.chi.n_qubits)))
    throw ValidationError("reference unitary dimension mismatch");
}

Matrix w_matrix(const Matrix& u) {
  validate_unitary(u);
  int n = qubit_count_for_dim(u.rows());
  Matrix w = transfer_matrix(
      n, [&](const Matrix& e) { return Matrix(u * e * u.adjoint()); });
  // Tr(U E_n U^dag) = Tr(E_n) and Tr(E_m^dag) vanish for m, n > 0: the first
  // row and column are exactly e_0; store them without fp residue.
  w.row(0).setZero();
  w.col(0).setZero();
  w(0, 0) = 1.0;
  return w;
}

ErrorMatrix to_error_matrix(const ProcessMatrix& chi_mat,
                            const Matrix& u_desired,
                            ErrorConvention convention) {
  validate_process_matrix(chi_mat);
  validate_unitary(u_desired);
  if (u_desired.rows() != static_cast<Eigen::Index>(pauli_dim(chi_mat.n_qubits)))
    throw ValidationError("desired unitary dimension mismatch");
  Matrix u_adj = u_desired.adjoint();
  Matrix v =
      convention == ErrorConvention::ErrorAfter
          ? transfer_matrix(chi_mat.n_qubits,
                            [&](const Matrix& e) { return Matrix(e * u_adj); })
          : transfer_matrix(chi_mat.n_qubits, [&](const Matrix& e) {
              return Matrix(u_adj * e);
            });
  ErrorMatrix err;
  err.chi = {chi_mat.n_qubits, Matrix(v * chi_mat.m * v.adjoint())};
  err.convention = convention;
  err.reference_unitary = u_desired;
  return err;
}

ProcessMatrix from_error_matrix(const ErrorMatrix& err) {
  Matrix u_adj = err.reference_unitary.adjoint();
  Matrix v =
      err.convention == ErrorConvention::ErrorAfter
          ? transfer_matrix(err.chi.n_qubits,
                            [&](const Matrix& e) { return Matrix(e * u_adj); })
          : transfer_matrix(err.chi.n_qubits, [&](const Matrix& e) {
              return Matrix(u_adj * e);
            });
  return {err.chi.n_qubits, Matrix(v.adjoint() * err.chi.m * v)};
}

ErrorMatrix convert_convention(const ErrorMatrix& err) {
  Matrix w = w_matrix(err.reference_unitary);
  ErrorMatrix out;
  out.chi.n_qubits = err.chi.n_qubits;
  if (err.convention == ErrorConvention::ErrorAfter) {
    out.chi.m = w.adjoint() * err.chi.m * w;
    out.convention = ErrorConvention::ErrorBefore;
  } else {
    out.chi.m = w * err.chi.m * w.adjoint();
    out.convention = ErrorConvention::ErrorAfter;
  }
  out.reference_unitary = err.reference_unitary;
  return out;
}

KrausDecomposition kraus_decompose(const ProcessMatrix& chi_mat) {
  const Matrix& m = chi_mat.m;
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > validation_tolerance())
    throw ValidationError("process matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("eigendecomposition failed");
  double scale = std::max(m.trace().real(), 1.0);
  KrausDecomposition out;
  // Solver returns ascending order; emit descending.
  for (Eigen::Index i = m.rows() - 1; i >= 0; --i) {
    double lambda = es.eigenvalues()[i];
    if (lambda < -1e-8 * scale)
      throw NumericalError("process matrix eigenvalue " +
                           std::to_string(lambda) + " below -1e-8");
    Vector a = es.eigenvectors().col(i);
    // Deterministic phase: dominant coefficient real positive, ties resolved
    // toward the lowest index.
    Eigen::Index dominant = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      if (std::abs(a[k]) > best + 1e-15) {
        best = std::abs(a[k]);
        dominant = k;
      }
    }
    if (best > 0) a *= std::conj(a[dominant] / std::abs(a[dominant]));
    out.weights.push_back(std::max(lambda, 0.0));
    out.operators.push_back(pauli_reconstruct(a, chi_mat.n_qubits));
    out.coefficients.push_back(std::move(a));
  }
  return out;
}

Vector extract_unitary_error(const ErrorMatrix& err) {
  double f = err.fidelity();
  if (f <= 1e-12)
    throw NumericalError("fidelity too small to extract a unitary error");
  Vector u = Vector::Zero(err.chi.m.rows());
  u[0] = 1.0;
  for (Eigen::Index n = 1; n < u.size(); ++n)
    u[n] = Complex(0, err.chi.m(n, 0).imag() / f);
  return u;
}

CoherentSplit coherent_split(const ErrorMatrix& err,
                             CoherentSplitVariant variant) {
  const Matrix& m = err.chi.m;
  const Eigen::Index size = m.rows();
  double f = err.fidelity();
  if (f <= 1e-12) throw NumericalError("fidelity too small to split");

  CoherentSplit out;
  out.low_fidelity_warning = (1.0 - f) > 0.2;

  double off = 0.0;
  for (Eigen::Index n = 1; n < size; ++n) off += std::norm(m(0, n));
  double denom = 1.0 - off;
  if (denom <= 0.0)
    throw NumericalError("coherent split denominator is not positive");
  double lambda0 = f / denom;

  Matrix coh(size, size);
  if (variant == CoherentSplitVariant::kLeadingKraus) {
    Vector a(size);
    a[0] = std::sqrt(f / lambda0);
    for (Eigen::Index n = 1; n < size; ++n) a[n] = m(n, 0) / lambda0;
    coh = lambda0 * (a * a.adjoint());
  } else {
    // Rank-1 estimate built from column 0: borders copied verbatim, interior
    // chi(m,0) chi(0,n). Written via conj(chi(n,0)) so the result is
    // Hermitian even when the input carries fp asymmetry.
    coh.setZero();
    coh(0, 0) = f;
    for (Eigen::Index n = 1; n < size; ++n) {
      coh(n, 0) = m(n, 0);
      coh(0, n) = m(0, n);
    }
    for (Eigen::Index mm = 1; mm < size; ++mm)
      for (Eigen::Index nn = 1; nn < size; ++nn)
        coh(mm, nn) = m(mm, 0) * std::conj(m(nn, 0));
  }

  out.coherent = {err.chi.n_qubits, coh};
  out.decoherent = {err.chi.n_qubits, Matrix(m - coh)};
  Vector u_err = extract_unitary_error(err);
  out.unitary_error = u_err.tail(size - 1).squaredNorm();
  out.decoherence_error = 1.0 - lambda0;
  return out;
}

}  // namespace chi
