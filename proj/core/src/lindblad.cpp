#include "chi/lindblad.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chi/pauli.hpp"

namespace chi {

namespace {

// Quadrature refinement targets: per sub-step decay probability and unitary
// rotation angle. Small enough that the midpoint-rule error stays far below
// the neglected (Gamma t)^2 terms of the first-order pattern itself.
constexpr double kMaxRateStep = 1e-3;
constexpr double kMaxAngleStep = 0.05;

struct SegmentBasis {
  Eigen::VectorXd eigenvalues;
  Matrix eigenvectors;
};

SegmentBasis diagonalize_hamiltonian(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  if (es.info() != Eigen::Success)
    throw NumericalError("Hamiltonian eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix evolve(const SegmentBasis& basis, double tau) {
  Vector phases(basis.eigenvalues.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases[i] = std::exp(Complex(0.0, -basis.eigenvalues[i] * tau));
  return basis.eigenvectors * phases.asDiagonal() *
         basis.eigenvectors.adjoint();
}

double segment_rate_sum(const ScheduleSegment& seg) {
  double sum = 0.0;
  for (const LindbladChannel& ch : seg.channels) sum += ch.rate;
  return sum;
}

int substep_count(const ScheduleSegment& seg) {
  double rate_steps = segment_rate_sum(seg) * seg.duration / kMaxRateStep;
  double angle_steps =
      seg.hamiltonian.norm() * seg.duration / kMaxAngleStep;
  double needed = std::max({rate_steps, angle_steps, 1.0});
  return static_cast<int>(std::min(std::ceil(needed), 1e7));
}

// B_mn = b_m conj(b_n) - (c_m delta_n0 + conj(c_n) delta_m0) / 2 with
// b = expansion of B and c = expansion of B^dag B.
Matrix decoherence_pattern(const Matrix& jump_operator) {
  Vector b = expand_in_pauli(jump_operator);
  Vector c = expand_in_pauli(Matrix(jump_operator.adjoint() * jump_operator));
  Matrix pattern = b * b.adjoint();
  pattern.col(0) -= 0.5 * c;
  pattern.row(0) -= 0.5 * c.adjoint();
  return pattern;
}

}  // namespace

double GateSchedule::total_time() const {
  double t = 0.0;
  for (const ScheduleSegment& seg : segments) t += seg.duration;
  return t;
}

Eigen::Index GateSchedule::dim() const {
  return segments.empty() ? 0 : segments.front().hamiltonian.rows();
}

void validate_schedule(const GateSchedule& schedule, double tol) {
  Eigen::Index dim = schedule.dim();
  for (const ScheduleSegment& seg : schedule.segments) {
    if (!(seg.duration > 0.0))
      throw ValidationError("segment durations must be positive");
    if (seg.hamiltonian.rows() != dim || seg.hamiltonian.cols() != dim)
      throw ValidationError("segment Hamiltonian dimension mismatch");
    if (!seg.hamiltonian.allFinite())
      throw ValidationError("segment Hamiltonian has non-finite entries");
    double scale = std::max(1.0, seg.hamiltonian.cwiseAbs().maxCoeff());
    if ((seg.hamiltonian - seg.hamiltonian.adjoint()).cwiseAbs().maxCoeff() >
        tol * scale)
      throw ValidationError("segment Hamiltonian is not Hermitian");
    for (const LindbladChannel& ch : seg.channels) {
      if (!(ch.rate >= 0.0))
        throw ValidationError("channel rates must be non-negative");
      if (ch.jump_operator.rows() != dim || ch.jump_operator.cols() != dim)
        throw ValidationError("jump operator dimension mismatch");
      if (!ch.jump_operator.allFinite())
        throw ValidationError("jump operator has non-finite entries");
    }
  }
}

Matrix schedule_unitary(const GateSchedule& schedule, Eigen::Index dim) {
  if (schedule.segments.empty()) {
    if (dim <= 0)
      throw ValidationError("empty schedule needs an explicit dimension");
    return Matrix::Identity(dim, dim);
  }
  validate_schedule(schedule);
  Eigen::Index d = schedule.dim();
  Matrix u = Matrix::Identity(d, d);
  for (const ScheduleSegment& seg : schedule.segments)
    u = evolve(diagonalize_hamiltonian(seg.hamiltonian), seg.duration) * u;
  return u;
}

Matrix lindblad_generator(const ScheduleSegment& segment) {
  Eigen::Index d = segment.hamiltonian.rows();
  Matrix id = Matrix::Identity(d, d);
  const Matrix& h = segment.hamiltonian;
  Matrix gen = Complex(0.0, -1.0) *
               (Eigen::kroneckerProduct(id, h).eval() -
                Eigen::kroneckerProduct(h.transpose(), id).eval());
  for (const LindbladChannel& ch : segment.channels) {
    if (ch.rate == 0.0) continue;
    const Matrix& b = ch.jump_operator;
    Matrix bdb = b.adjoint() * b;
    gen += ch.rate *
           (Eigen::kroneckerProduct(b.conjugate(), b).eval() -
            0.5 * Eigen::kroneckerProduct(id, bdb).eval() -
            0.5 * Eigen::kroneckerProduct(bdb.transpose(), id).eval());
  }
  return gen;
}

Matrix schedule_superoperator(const GateSchedule& schedule, Eigen::Index dim) {
  if (schedule.segments.empty()) {
    if (dim <= 0)
      throw ValidationError("empty schedule needs an explicit dimension");
    return Matrix::Identity(dim * dim, dim * dim);
  }
  validate_schedule(schedule);
  Eigen::Index d = schedule.dim();
  Matrix s = Matrix::Identity(d * d, d * d);
  for (const ScheduleSegment& seg : schedule.segments)
    s = Matrix(lindblad_generator(seg) * seg.duration).exp() * s;
  return s;
}

Matrix propagate_density(const GateSchedule& schedule, const Matrix& rho0) {
  validate_density_matrix(rho0);
  if (schedule.segments.empty()) return rho0;
  if (schedule.dim() != rho0.rows())
    throw ValidationError("density matrix does not match the schedule");
  Matrix s = schedule_superoperator(schedule);
  Eigen::Index d = rho0.rows();
  Vector vec_in = Eigen::Map<const Vector>(rho0.data(), d * d);
  Vector vec_out = s * vec_in;
  return Eigen::Map<const Matrix>(vec_out.data(), d, d);
}

ProcessMatrix chi_from_superoperator(const Matrix& s, int n_qubits) {
  auto d = static_cast<Eigen::Index>(pauli_dim(n_qubits));
  auto n_coeffs = static_cast<Eigen::Index>(pauli_count(n_qubits));
  if (s.rows() != d * d || s.cols() != d * d)
    throw ValidationError("superoperator dimension mismatch");
  const auto& basis = pauli_basis(n_qubits);
  std::vector<Matrix> conj_basis;
  conj_basis.reserve(basis.size());
  for (const Matrix& e : basis) conj_basis.push_back(e.conjugate());

  ProcessMatrix chi_mat{n_qubits, Matrix(n_coeffs, n_coeffs)};
  double norm = static_cast<double>(d) * static_cast<double>(d);
  for (Eigen::Index m = 0; m < n_coeffs; ++m)
    for (Eigen::Index n = 0; n < n_coeffs; ++n) {
      Matrix k = Eigen::kroneckerProduct(conj_basis[static_cast<std::size_t>(n)],
                                         basis[static_cast<std::size_t>(m)]);
      chi_mat.m(m, n) = (k.conjugate().cwiseProduct(s)).sum() / norm;
    }
  return chi_mat;
}

ProcessMatrix exact_channel_chi(const GateSchedule& schedule, int n_qubits) {
  if (schedule.segments.empty()) {
    if (n_qubits < 1)
      throw ValidationError("empty schedule needs an explicit qubit count");
    return identity_process(n_qubits);
  }
  int nq = qubit_count_for_dim(schedule.dim());
  return chi_from_superoperator(schedule_superoperator(schedule), nq);
}

GateSchedule normalize_channels(const GateSchedule& schedule) {
  validate_schedule(schedule);
  GateSchedule out = schedule;
  for (ScheduleSegment& seg : out.segments) {
    Eigen::Index d = seg.hamiltonian.rows();
    for (LindbladChannel& ch : seg.channels) {
      Complex b0 = ch.jump_operator.trace() / static_cast<double>(d);
      if (b0 != Complex(0.0, 0.0)) {
        // H_a = i (rate/2) (conj(b0) B - b0 B^dag) keeps the physical channel
        // fixed while zeroing the identity component of B.
        seg.hamiltonian +=
            Complex(0.0, ch.rate / 2.0) *
            (std::conj(b0) * ch.jump_operator -
             b0 * ch.jump_operator.adjoint());
        ch.jump_operator -= b0 * Matrix::Identity(d, d);
      }
      ch.normalized = true;
    }
  }
  return out;
}

ErrorMatrix first_order_error(const GateSchedule& schedule,
                              ErrorConvention convention,
                              bool second_order_patch) {
  if (schedule.segments.empty())
    throw ValidationError("first_order_error needs at least one segment");
  int nq = qubit_count_for_dim(schedule.dim());
  auto n_coeffs = static_cast<Eigen::Index>(pauli_count(nq));
  GateSchedule sched = normalize_channels(schedule);

  // Segment eigenbases and the unitary accumulated before each segment.
  std::vector<SegmentBasis> bases;
  std::vector<Matrix> starts;
  Eigen::Index d = sched.dim();
  Matrix u = Matrix::Identity(d, d);
  for (const ScheduleSegment& seg : sched.segments) {
    bases.push_back(diagonalize_hamiltonian(seg.hamiltonian));
    starts.push_back(u);
    u = evolve(bases.back(), seg.duration) * u;
  }
  Matrix u_gate = u;

  Matrix acc = Matrix::Zero(n_coeffs, n_coeffs);
  for (std::size_t k = 0; k < sched.segments.size(); ++k) {
    const ScheduleSegment& seg = sched.segments[k];
    std::vector<std::pair<double, Matrix>> patterns;
    for (const LindbladChannel& ch : seg.channels)
      if (ch.rate > 0.0)
        patterns.emplace_back(ch.rate, decoherence_pattern(ch.jump_operator));
    if (patterns.empty()) continue;

    int n_sub = substep_count(seg);
    double step = seg.duration / n_sub;
    for (int j = 0; j < n_sub; ++j) {
      Matrix u_mid = evolve(bases[k], (j + 0.5) * step) * starts[k];
      Matrix w = convention == ErrorConvention::ErrorAfter
                     ? w_matrix(Matrix(u_gate * u_mid.adjoint()))
                     : w_matrix(u_mid);
      for (const auto& [rate, pattern] : patterns) {
        if (convention == ErrorConvention::ErrorAfter)
          acc += (rate * step) * (w * pattern * w.adjoint());
        else
          acc += (rate * step) * (w.adjoint() * pattern * w);
      }
    }
  }

  ErrorMatrix err;
  err.chi = identity_process(nq);
  err.chi.m += acc;
  err.convention = convention;
  err.reference_unitary = u_gate;
  if (second_order_patch) {
    // Rank-1 coherent completion from the first-order borders; only touches
    // the interior, so the borders used here stay the first-order ones.
    for (Eigen::Index m = 1; m < n_coeffs; ++m)
      for (Eigen::Index n = 1; n < n_coeffs; ++n)
        err.chi.m(m, n) += err.chi.m(m, 0) * std::conj(err.chi.m(n, 0));
  }
  return err;
}

double first_order_fidelity(const GateSchedule& schedule) {
  if (schedule.segments.empty())
    throw ValidationError("first_order_fidelity needs at least one segment");
  validate_schedule(schedule);
  // Deliberately never reads the Hamiltonians: the first-order fidelity is
  // independent of the desired unitary evolution.
  double loss = 0.0;
  for (const ScheduleSegment& seg : schedule.segments) {
    Eigen::Index d = seg.hamiltonian.rows();
    for (const LindbladChannel& ch : seg.channels) {
      double b_sq = ch.jump_operator.squaredNorm() / static_cast<double>(d);
      double b0_sq = std::norm(ch.jump_operator.trace() /
                               static_cast<double>(d));
      loss += ch.rate * seg.duration * std::max(0.0, b_sq - b0_sq);
    }
  }
  return 1.0 - loss;
}

ProcessMatrix analytic_dephasing(double cos_avg, double sin_avg) {
  if (std::abs(cos_avg) > 1.0 || std::abs(sin_avg) > 1.0 ||
      cos_avg * cos_avg + sin_avg * sin_avg > 1.0 + 1e-12)
    throw ValidationError("dephasing moments exceed |<exp(i phi)>| = 1");
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = (1.0 + cos_avg) / 2.0;
  m(3, 3) = (1.0 - cos_avg) / 2.0;
  m(0, 3) = Complex(0.0, sin_avg / 2.0);
  m(3, 0) = Complex(0.0, -sin_avg / 2.0);
  return {1, m};
}

ProcessMatrix analytic_relaxation(double t, double t1, double e_over_t) {
  if (t < 0.0) throw ValidationError("negative duration");
  if (!(t1 > 0.0)) throw ValidationError("T1 must be positive");
  if (std::isnan(e_over_t)) throw ValidationError("E/T must be a number");
  double gamma_down = 1.0 / (t1 * (1.0 + std::exp(-e_over_t)));
  double gamma_up = 1.0 / (t1 * (1.0 + std::exp(e_over_t)));
  double ed = std::exp(-gamma_down * t);
  double eu = std::exp(-gamma_up * t);
  double edh = std::exp(-gamma_down * t / 2.0);
  double euh = std::exp(-gamma_up * t / 2.0);

  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = (euh + edh) * (euh + edh) / 4.0;
  m(3, 3) = (euh - edh) * (euh - edh) / 4.0;
  m(1, 1) = m(2, 2) = (1.0 - ed) / 4.0 + (1.0 - eu) / 4.0;
  m(1, 2) = Complex(0.0, -(eu - ed) / 4.0);
  m(2, 1) = Complex(0.0, (eu - ed) / 4.0);
  m(0, 3) = m(3, 0) = (eu - ed) / 4.0;
  return {1, m};
}

ProcessMatrix analytic_combined(double t, double t1, double e_over_t,
                                double cos_avg) {
  ProcessMatrix rel = analytic_relaxation(t, t1, e_over_t);
  ProcessMatrix deph = analytic_dephasing(cos_avg);
  // Dephasing only reshuffles II and ZZ; the relaxation-scenario elements
  // pass through untouched (symmetric noise, <sin cos> = 0).
  ProcessMatrix out{1, Matrix::Zero(4, 4)};
  out.m(1, 1) = rel.m(1, 1);
  out.m(2, 2) = rel.m(2, 2);
  out.m(1, 2) = rel.m(1, 2);
  out.m(2, 1) = rel.m(2, 1);
  out.m(0, 3) = rel.m(0, 3);
  out.m(3, 0) = rel.m(3, 0);
  out.m(3, 3) = deph.m(3, 3) * rel.m(0, 0) + rel.m(3, 3) * deph.m(0, 0);
  out.m(0, 0) = deph.m(0, 0) * rel.m(0, 0) + deph.m(3, 3) * rel.m(3, 3);
  return out;
}

ProcessMatrix analytic_short_time(double t, double t1, double e_over_t,
                                  double cos_avg) {
  if (t < 0.0) throw ValidationError("negative duration");
  if (!(t1 > 0.0)) throw ValidationError("T1 must be positive");
  if (std::abs(cos_avg) > 1.0)
    throw ValidationError("|<cos phi>| cannot exceed 1");
  double th = std::tanh(e_over_t / 2.0);
  Matrix m = Matrix::Zero(4, 4);
  m(1, 1) = m(2, 2) = t / (4.0 * t1);
  m(3, 3) = (1.0 - cos_avg) / 2.0;
  m(0, 0) = 1.0 - t / (2.0 * t1) - (1.0 - cos_avg) / 2.0;
  m(1, 2) = Complex(0.0, -(t / (4.0 * t1)) * th);
  m(2, 1) = Complex(0.0, (t / (4.0 * t1)) * th);
  m(0, 3) = m(3, 0) = (t / (4.0 * t1)) * th;
  return {1, m};
}

double ramsey_signal(double t, double t1, double cos_avg, double phi_r) {
  if (t < 0.0) throw ValidationError("negative duration");
  if (!(t1 > 0.0)) throw ValidationError("T1 must be positive");
  if (std::abs(cos_avg) > 1.0)
    throw ValidationError("|<cos phi>| cannot exceed 1");
  return 0.5 + 0.5 * std::exp(-t / (2.0 * t1)) * cos_avg * std::cos(phi_r);
}

double ramsey_cos_avg(double p_excited, double t, double t1, double phi_r) {
  if (t < 0.0) throw ValidationError("negative duration");
  if (!(t1 > 0.0)) throw ValidationError("T1 must be positive");
  double denom = std::exp(-t / (2.0 * t1)) * std::cos(phi_r);
  if (std::abs(denom) < 1e-15)
    throw ValidationError("Ramsey fringe amplitude is at a node");
  return (2.0 * p_excited - 1.0) / denom;
}

}  // namespace chi
