#include "chi/spam.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "chi/compose.hpp"
#include "chi/gates.hpp"
#include "chi/pauli.hpp"
#include "chi/rng.hpp"

namespace chi {

namespace {

constexpr const char* kTensorSign = "\xE2\x8A\x97";  // UTF-8 tensor product
constexpr const char* kRootSign = "\xE2\x88\x9A";    // UTF-8 square root

Matrix token_unitary(const std::string& token) {
  if (token == "I") return gate_identity(1);
  if (token == "X") return gate_x();
  if (token == "Y") return gate_y();
  if (token == std::string(kRootSign) + "X" || token == "sX")
    return gate_sqrt_x();
  if (token == std::string(kRootSign) + "Y" || token == "sY")
    return gate_sqrt_y();
  throw ValidationError("unknown calibration gate token '" + token + "'");
}

std::vector<std::string> split_label(const std::string& label) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t pos = 0;
  while (pos < label.size()) {
    if (label.compare(pos, 3, kTensorSign) == 0) {
      tokens.push_back(current);
      current.clear();
      pos += 3;
    } else if (label[pos] == '*') {
      tokens.push_back(current);
      current.clear();
      pos += 1;
    } else {
      current.push_back(label[pos]);
      pos += 1;
    }
  }
  tokens.push_back(current);
  return tokens;
}

// Pauli sector of index m: one bit per qubit, set where the factor is not
// the identity. Conjugation by any calibration gate permutes Pauli labels
// within a sector, so sector projectors span the data-equivalent directions.
std::size_t sector_of(std::size_t m, int n_qubits) {
  std::size_t mask = 0;
  for (int q = n_qubits - 1; q >= 0; --q) {
    if (m % 4 != 0) mask |= std::size_t{1} << q;
    m /= 4;
  }
  return mask;
}

struct SectorTable {
  // sector mask -> member Pauli indices
  std::vector<std::vector<Eigen::Index>> members;
};

SectorTable sector_table(int n_qubits) {
  SectorTable table;
  table.members.resize(std::size_t{1} << n_qubits);
  Eigen::Index size = static_cast<Eigen::Index>(pauli_count(n_qubits));
  for (Eigen::Index m = 0; m < size; ++m)
    table.members[sector_of(static_cast<std::size_t>(m), n_qubits)]
        .push_back(m);
  return table;
}

void check_dims(const SpamModel& spam, Eigen::Index d2) {
  if (spam.chi_prep.m.rows() != d2 || spam.chi_meas.m.rows() != d2)
    throw ValidationError("spam model dimension does not match the data");
}

Matrix hermitize(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

// Moves the sector-projector component of delta_prep onto delta_meas, but
// only along directions the data cannot see (true gauge freedoms). The move
// keeps both sides trace preserving and fixes the convention that all
// unresolvable ambiguity lives on chi_meas. Sectors pinned by the gate set
// (possible with gates beyond the calibration family) are left alone.
void fix_split(Matrix& delta_prep, Matrix& delta_meas,
               const SectorTable& table, const std::vector<bool>& movable) {
  for (std::size_t s = 0; s < table.members.size(); ++s) {
    if (!movable[s]) continue;
    const std::vector<Eigen::Index>& sector = table.members[s];
    Complex mean = 0.0;
    for (Eigen::Index m : sector) mean += delta_prep(m, m);
    mean /= static_cast<double>(sector.size());
    for (Eigen::Index m : sector) {
      delta_prep(m, m) -= mean;
      delta_meas(m, m) += mean;
    }
  }
}

struct SolveResult {
  SpamModel model;
  double residual = 0.0;
};

SolveResult solve_spam(const CalibrationSet& cal,
                       const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw ValidationError("empty calibration selection");
  const Eigen::Index d = cal.gates[indices.front()].unitary.rows();
  const int n_qubits = qubit_count_for_dim(d);
  const Eigen::Index d2 = static_cast<Eigen::Index>(pauli_count(n_qubits));
  const Eigen::Index k = d2 * d2;
  const ProcessMatrix chi_id = identity_process(n_qubits);

  bool has_identity = false;
  std::vector<Matrix> ws;
  std::vector<Matrix> deviations;
  ws.reserve(indices.size());
  deviations.reserve(indices.size());
  for (std::size_t idx : indices) {
    const CalibrationGate& gate = cal.gates[idx];
    if (gate.unitary.rows() != d || gate.unitary.cols() != d)
      throw ValidationError("calibration gates must share one dimension");
    if (gate.measured.convention != ErrorConvention::ErrorAfter)
      throw ValidationError(
          "calibration error matrices must use the after-gate convention");
    if (gate.measured.chi.m.rows() != d2)
      throw ValidationError("calibration data dimension mismatch for '" +
                            gate.label + "'");
    Matrix w = w_matrix(gate.unitary);
    if ((w - Matrix::Identity(d2, d2)).cwiseAbs().maxCoeff() < 1e-9)
      has_identity = true;
    ws.push_back(std::move(w));
    deviations.push_back(hermitize(gate.measured.chi.m - chi_id.m));
  }
  if (!has_identity)
    throw ValidationError("calibration set must contain the identity gate");

  // Joint least squares for x = [vec(dP); vec(dM)] over rows
  // [conj(W) (x) W, 1] x = vec(D). The conjugations are unitary, so the
  // normal matrix has the closed form below.
  const double n_gates = static_cast<double>(indices.size());
  Matrix s_sum = Matrix::Zero(k, k);
  Vector b_top = Vector::Zero(k);
  Vector b_bot = Vector::Zero(k);
  for (std::size_t g = 0; g < ws.size(); ++g) {
    Matrix c = Eigen::kroneckerProduct(ws[g].conjugate(), ws[g]).eval();
    Eigen::Map<const Vector> dg(deviations[g].data(), k);
    s_sum += c;
    b_top += c.adjoint() * dg;
    b_bot += dg;
  }
  Matrix normal = Matrix::Zero(2 * k, 2 * k);
  normal.topLeftCorner(k, k) = n_gates * Matrix::Identity(k, k);
  normal.bottomRightCorner(k, k) = n_gates * Matrix::Identity(k, k);
  normal.topRightCorner(k, k) = s_sum.adjoint();
  normal.bottomLeftCorner(k, k) = s_sum;
  Vector rhs(2 * k);
  rhs.head(k) = b_top;
  rhs.tail(k) = b_bot;

  Eigen::SelfAdjointEigenSolver<Matrix> es(normal);
  if (es.info() != Eigen::Success)
    throw NumericalError("calibration normal matrix eigensolve failed");
  const double lambda_max = es.eigenvalues().maxCoeff();
  // Gauge directions carry an exact zero eigenvalue that the eigensolver
  // resolves only to about eps * lambda_max, while every data-visible
  // direction sits at O(1). The cutoff splits those two clusters.
  const double cut = 1e-12 * lambda_max;

  const SectorTable table = sector_table(n_qubits);
  std::vector<Vector> gauge;
  for (const std::vector<Eigen::Index>& sector : table.members) {
    Vector v = Vector::Zero(2 * k);
    for (Eigen::Index m : sector) {
      v[m * d2 + m] = 1.0;
      v[k + m * d2 + m] = -1.0;
    }
    gauge.push_back(v / v.norm());
  }

  const std::size_t expected_null = std::size_t{1} << n_qubits;
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] <= cut) null_cols.push_back(i);

  // A sector direction is movable gauge only if it lies in the null space.
  std::vector<bool> movable(gauge.size(), false);
  for (std::size_t s = 0; s < gauge.size(); ++s) {
    double in_null = 0.0;
    for (Eigen::Index col : null_cols)
      in_null += std::norm(es.eigenvectors().col(col).dot(gauge[s]));
    movable[s] = in_null > 1.0 - 1e-8;
  }

  // Everything the data cannot see, beyond the known per-sector gauge,
  // means the selection is unusable.
  if (null_cols.size() > expected_null) {
    std::string worst;
    double worst_norm = 0.0;
    std::size_t extra = 0;
    for (Eigen::Index col : null_cols) {
      Vector v = es.eigenvectors().col(col);
      for (const Vector& g : gauge) v -= g.dot(v) * g;
      if (v.norm() < 1e-6) continue;
      ++extra;
      Eigen::Index at = 0;
      v.cwiseAbs().maxCoeff(&at);
      bool meas = at >= k;
      Eigen::Index flat = meas ? at - k : at;
      std::string slot =
          (meas ? "meas(" : "prep(") +
          pauli_label(static_cast<std::size_t>(flat % d2), n_qubits) + "," +
          pauli_label(static_cast<std::size_t>(flat / d2), n_qubits) + ")";
      if (v.norm() >= worst_norm) {
        worst_norm = v.norm();
        worst = slot;
      }
    }
    if (extra > 0)
      throw ValidationError(
          "calibration selection leaves " + std::to_string(extra) +
          " directions unresolved beyond the gauge, e.g. " + worst);
  }

  Vector x = Vector::Zero(2 * k);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()[i] <= cut) continue;
    Complex coeff = es.eigenvectors().col(i).dot(rhs) / es.eigenvalues()[i];
    x += coeff * es.eigenvectors().col(i);
  }

  Matrix delta_prep =
      hermitize(Eigen::Map<const Matrix>(x.data(), d2, d2));
  Matrix delta_meas =
      hermitize(Eigen::Map<const Matrix>(x.data() + k, d2, d2));
  fix_split(delta_prep, delta_meas, table, movable);

  SolveResult result;
  result.model.chi_prep = {n_qubits, chi_id.m + delta_prep};
  result.model.chi_meas = {n_qubits, chi_id.m + delta_meas};
  double misfit = 0.0;
  for (std::size_t g = 0; g < ws.size(); ++g) {
    Matrix predicted = ws[g] * delta_prep * ws[g].adjoint() + delta_meas;
    misfit += (predicted - deviations[g]).squaredNorm();
  }
  result.residual = std::sqrt(misfit);
  return result;
}

}  // namespace

void validate_spam_model(const SpamModel& spam, double tol) {
  const ProcessMatrix* parts[2] = {&spam.chi_prep, &spam.chi_meas};
  const char* names[2] = {"chi_prep", "chi_meas"};
  if (spam.chi_prep.m.rows() != spam.chi_meas.m.rows())
    throw ValidationError("spam sides have different dimensions");
  for (int i = 0; i < 2; ++i) {
    const Matrix& m = parts[i]->m;
    if (!m.allFinite())
      throw ValidationError(std::string(names[i]) + " has non-finite entries");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw ValidationError(std::string(names[i]) + " is not Hermitian");
    if (!is_trace_preserving(*parts[i], tol))
      throw ValidationError(std::string(names[i]) +
                            " is not trace preserving");
    if (m(0, 0).real() < 0.5)
      throw ValidationError(std::string(names[i]) +
                            " is too far from the identity (chi_00 < 0.5)");
  }
}

SpamModel trivial_spam(int n_qubits) {
  SpamModel spam;
  spam.chi_prep = identity_process(n_qubits);
  spam.chi_meas = identity_process(n_qubits);
  return spam;
}

Matrix calibration_unitary(const std::string& label) {
  std::vector<std::string> tokens = split_label(label);
  Matrix u = token_unitary(tokens.front());
  for (std::size_t i = 1; i < tokens.size(); ++i)
    u = Eigen::kroneckerProduct(u, token_unitary(tokens[i])).eval();
  return u;
}

std::vector<std::string> calibration_labels(int n_qubits) {
  if (n_qubits < 1) throw ValidationError("need at least one qubit");
  const std::string tokens[5] = {"I", "X", "Y",
                                 std::string(kRootSign) + "X",
                                 std::string(kRootSign) + "Y"};
  std::size_t total = 1;
  for (int q = 0; q < n_qubits; ++q) total *= 5;
  std::vector<std::string> labels;
  labels.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::string label;
    std::size_t rem = idx;
    std::size_t place = total / 5;
    for (int q = 0; q < n_qubits; ++q) {
      if (q > 0) label += kTensorSign;
      label += tokens[rem / place];
      rem %= place;
      place /= 5;
    }
    labels.push_back(std::move(label));
  }
  return labels;
}

ErrorMatrix spam_forward(const ErrorMatrix& err_true, const SpamModel& spam,
                         SpamForwardMode mode) {
  validate_spam_model(spam);
  check_dims(spam, err_true.chi.m.rows());

  if (mode == SpamForwardMode::kExact) {
    ProcessMatrix channel = compose_exact(
        spam.chi_meas,
        compose_exact(from_error_matrix(err_true), spam.chi_prep));
    return to_error_matrix(channel, err_true.reference_unitary,
                           err_true.convention);
  }

  const int n = err_true.chi.n_qubits;
  Matrix delta_prep = spam.chi_prep.m - identity_process(n).m;
  Matrix delta_meas = spam.chi_meas.m - identity_process(n).m;
  Matrix w = w_matrix(err_true.reference_unitary);
  ErrorMatrix out = err_true;
  if (err_true.convention == ErrorConvention::ErrorAfter)
    out.chi.m += w * delta_prep * w.adjoint() + delta_meas;
  else
    out.chi.m += delta_prep + w.adjoint() * delta_meas * w;
  return out;
}

CalibrationSet synthetic_calibration(const SpamModel& spam, int n_qubits,
                                     SpamForwardMode mode) {
  CalibrationSet cal;
  for (const std::string& label : calibration_labels(n_qubits)) {
    CalibrationGate gate;
    gate.label = label;
    gate.unitary = calibration_unitary(label);
    ErrorMatrix perfect{identity_process(n_qubits),
                        ErrorConvention::ErrorAfter, gate.unitary};
    gate.measured = spam_forward(perfect, spam, mode);
    cal.gates.push_back(std::move(gate));
  }
  return cal;
}

SpamModel identify_spam(const CalibrationSet& cal, double* residual) {
  if (cal.gates.empty()) throw ValidationError("empty calibration set");
  std::vector<std::size_t> all(cal.gates.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  SolveResult result = solve_spam(cal, all);
  if (residual) *residual = result.residual;
  return result.model;
}

SpamModel identify_spam_subset(const CalibrationSet& cal,
                               std::uint64_t subset_seed,
                               std::size_t subset_size, double* residual) {
  if (cal.gates.empty()) throw ValidationError("empty calibration set");
  if (subset_size < 1 || subset_size > cal.gates.size())
    throw ValidationError("subset size must be between 1 and the set size");

  std::size_t identity_idx = cal.gates.size();
  for (std::size_t i = 0; i < cal.gates.size(); ++i) {
    const Matrix& u = cal.gates[i].unitary;
    Matrix w = w_matrix(u);
    if ((w - Matrix::Identity(w.rows(), w.cols())).cwiseAbs().maxCoeff() <
        1e-9) {
      identity_idx = i;
      break;
    }
  }
  if (identity_idx == cal.gates.size())
    throw ValidationError("calibration set must contain the identity gate");

  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < cal.gates.size(); ++i)
    if (i != identity_idx) others.push_back(i);
  RngStream rng(subset_seed, 0);
  for (std::size_t i = others.size(); i > 1; --i)
    std::swap(others[i - 1], others[rng.next_u64() % i]);

  std::vector<std::size_t> chosen{identity_idx};
  for (std::size_t i = 0; i + 1 < subset_size; ++i) chosen.push_back(others[i]);
  std::sort(chosen.begin(), chosen.end());

  SolveResult result = solve_spam(cal, chosen);
  if (residual) *residual = result.residual;
  return result.model;
}

ErrorMatrix subtract_spam(const ErrorMatrix& err_exp, const SpamModel& spam,
                          SpamSubtraction mode, bool* clamped) {
  validate_spam_model(spam);
  check_dims(spam, err_exp.chi.m.rows());
  if (clamped) *clamped = false;

  const int n = err_exp.chi.n_qubits;
  Matrix delta_prep = spam.chi_prep.m - identity_process(n).m;
  Matrix delta_meas = spam.chi_meas.m - identity_process(n).m;

  ErrorMatrix out = err_exp;
  switch (mode) {
    case SpamSubtraction::kFull: {
      Matrix w = w_matrix(err_exp.reference_unitary);
      if (err_exp.convention == ErrorConvention::ErrorAfter)
        out.chi.m -= w * delta_prep * w.adjoint() + delta_meas;
      else
        out.chi.m -= delta_prep + w.adjoint() * delta_meas * w;
      break;
    }
    case SpamSubtraction::kMeasurementOnly:
      if (err_exp.convention != ErrorConvention::ErrorAfter)
        throw ValidationError(
            "measurement-only subtraction needs the after-gate convention");
      out.chi.m -= delta_meas;
      break;
    case SpamSubtraction::kPreparationOnly:
      if (err_exp.convention != ErrorConvention::ErrorBefore)
        throw ValidationError(
            "preparation-only subtraction needs the before-gate convention");
      out.chi.m -= delta_prep;
      break;
  }

  for (Eigen::Index i = 0; i < out.chi.m.rows(); ++i) {
    double diag = out.chi.m(i, i).real();
    if (diag < 0.0 && diag > -1e-8) {
      out.chi.m(i, i) = 0.0;
      if (clamped) *clamped = true;
    }
  }
  return out;
}

double spam_fidelity_ratio(double f_exp, double f_identity, bool* clamped) {
  if (!(f_identity > 0.0) || f_identity > 1.0)
    throw ValidationError("identity fidelity must lie in (0, 1]");
  if (!std::isfinite(f_exp) || f_exp < 0.0)
    throw ValidationError("experimental fidelity must be finite and >= 0");
  double ratio = f_exp / f_identity;
  if (clamped) *clamped = ratio > 1.0;
  if (ratio > 1.0) ratio = 1.0;
  return ratio;
}

SpamValidity spam_validity(const SpamModel& spam) {
  SpamValidity v;
  Eigen::SelfAdjointEigenSolver<Matrix> prep(hermitize(spam.chi_prep.m),
                                             Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<Matrix> meas(hermitize(spam.chi_meas.m),
                                             Eigen::EigenvaluesOnly);
  v.prep_min_eigenvalue = prep.eigenvalues().minCoeff();
  v.meas_min_eigenvalue = meas.eigenvalues().minCoeff();
  return v;
}

}  // namespace chi
