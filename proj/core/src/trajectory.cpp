#include "chi/trajectory.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <cmath>
#include <cstddef>
#include <string>
#include <thread>

#include "chi/pauli.hpp"
#include "chi/rng.hpp"

namespace chi {

namespace {

constexpr double kMaxJumpProbability = 1e-3;
constexpr double kMaxTotalSteps = 2e7;
constexpr double kLeakageTol = 1e-6;

struct SegmentPlan {
  std::size_t steps = 1;
  double dt = 0.0;
  double start_time = 0.0;
  bool has_hamiltonian = false;
  Matrix half_step;  // exp(-i H dt / 2), exact
  Matrix no_jump;    // 1 - (dt/2) sum_k Gamma_k B_k^dag B_k
  std::vector<double> rates;
  std::vector<Matrix> jump_ops;
  std::vector<std::size_t> channel_ids;
};

// Builds per-segment step plans. Step counts come from the worst-case jump
// probability Gamma dt ||B||_op^2, so the < 1e-3 bound holds for any state.
std::vector<SegmentPlan> build_plans(const GateSchedule& schedule) {
  validate_schedule(schedule);
  if (schedule.segments.empty())
    throw ValidationError("schedule has no segments");
  const Eigen::Index d = schedule.dim();

  std::vector<SegmentPlan> plans;
  plans.reserve(schedule.segments.size());
  double total_steps = 0.0;
  double now = 0.0;
  for (const ScheduleSegment& seg : schedule.segments) {
    SegmentPlan plan;
    plan.start_time = now;
    now += seg.duration;

    double pressure = 0.0;  // sum_k Gamma_k ||B_k||_op^2
    Matrix damping = Matrix::Zero(d, d);
    for (std::size_t k = 0; k < seg.channels.size(); ++k) {
      const LindbladChannel& ch = seg.channels[k];
      if (ch.rate == 0.0) continue;
      Matrix bb = ch.jump_operator.adjoint() * ch.jump_operator;
      Eigen::SelfAdjointEigenSolver<Matrix> es(bb, Eigen::EigenvaluesOnly);
      pressure += ch.rate * es.eigenvalues().maxCoeff();
      damping += ch.rate * bb;
      plan.rates.push_back(ch.rate);
      plan.jump_ops.push_back(ch.jump_operator);
      plan.channel_ids.push_back(k);
    }

    double need = std::ceil(pressure * seg.duration / kMaxJumpProbability);
    plan.steps = static_cast<std::size_t>(std::max(1.0, need));
    total_steps += static_cast<double>(plan.steps);
    if (total_steps > kMaxTotalSteps)
      throw NumericalError(
          "step-size constraint unachievable: schedule needs more than " +
          std::to_string(static_cast<long long>(kMaxTotalSteps)) +
          " sub-steps");
    plan.dt = seg.duration / static_cast<double>(plan.steps);

    plan.has_hamiltonian = seg.hamiltonian.cwiseAbs().maxCoeff() > 0.0;
    if (plan.has_hamiltonian) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(seg.hamiltonian);
      if (es.info() != Eigen::Success)
        throw NumericalError("Hamiltonian eigendecomposition failed");
      Vector phases(es.eigenvalues().size());
      for (Eigen::Index i = 0; i < phases.size(); ++i)
        phases[i] = std::exp(Complex(0.0, -0.5 * plan.dt * es.eigenvalues()[i]));
      plan.half_step = es.eigenvectors() * phases.asDiagonal() *
                       es.eigenvectors().adjoint();
    }
    plan.no_jump = Matrix::Identity(d, d) - 0.5 * plan.dt * damping;
    plans.push_back(std::move(plan));
  }
  return plans;
}

TrajectoryRecord run_plans(const std::vector<SegmentPlan>& plans,
                           const Vector& psi0, RngStream rng,
                           bool monitor_top_level) {
  TrajectoryRecord rec;
  Vector psi = psi0;
  Vector scratch;
  const Eigen::Index top = psi.size() - 1;
  for (const SegmentPlan& plan : plans) {
    for (std::size_t step = 0; step < plan.steps; ++step) {
      if (plan.has_hamiltonian) psi = plan.half_step * psi;
      if (!plan.rates.empty()) {
        double u = rng.uniform();
        double acc = 0.0;
        bool jumped = false;
        for (std::size_t k = 0; k < plan.rates.size(); ++k) {
          scratch = plan.jump_ops[k] * psi;
          acc += plan.rates[k] * plan.dt * scratch.squaredNorm();
          if (u < acc) {
            psi = scratch / scratch.norm();
            rec.jumps.emplace_back(
                plan.start_time + (static_cast<double>(step) + 0.5) * plan.dt,
                plan.channel_ids[k]);
            jumped = true;
            break;
          }
        }
        if (!jumped) {
          psi = plan.no_jump * psi;
          psi /= psi.norm();
        }
      }
      if (plan.has_hamiltonian) psi = plan.half_step * psi;
      if (monitor_top_level && std::norm(psi[top]) > kLeakageTol)
        throw NumericalError(
            "truncated-space leakage: top basis state population " +
            std::to_string(std::norm(psi[top])) + " exceeds 1e-6");
    }
  }
  rec.final_state = std::move(psi);
  return rec;
}

Vector checked_state(const Vector& psi0, Eigen::Index d) {
  if (psi0.size() != d)
    throw ValidationError("state dimension does not match the schedule");
  if (!psi0.allFinite()) throw ValidationError("state has non-finite entries");
  double norm = psi0.norm();
  if (std::abs(norm - 1.0) > validation_tolerance())
    throw ValidationError("initial state is not normalized (norm " +
                          std::to_string(norm) + ")");
  return psi0 / norm;
}

// Average of final-state outer products over n_traj trajectories, reduced
// in fixed 1024-trajectory blocks so the sum is thread-count independent.
Matrix estimate_output(const std::vector<SegmentPlan>& plans,
                       const Vector& psi, std::uint64_t seed,
                       std::uint64_t base_stream, std::size_t n_traj,
                       int n_threads) {
  const Eigen::Index d = psi.size();
  constexpr std::size_t kBlock = 1024;
  const std::size_t n_blocks = (n_traj + kBlock - 1) / kBlock;
  std::vector<Matrix> sums(n_blocks);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (;;) {
      std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      Matrix acc = Matrix::Zero(d, d);
      std::size_t hi = std::min(n_traj, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < hi; ++i) {
        TrajectoryRecord rec =
            run_plans(plans, psi, RngStream(seed, base_stream + i), false);
        acc += rec.final_state * rec.final_state.adjoint();
      }
      sums[b] = std::move(acc);
    }
  };

  if (n_threads <= 1 || n_blocks <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    std::size_t spawn =
        std::min(static_cast<std::size_t>(n_threads), n_blocks);
    pool.reserve(spawn);
    for (std::size_t i = 0; i < spawn; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  Matrix total = Matrix::Zero(d, d);
  for (const Matrix& s : sums) total += s;
  return total / static_cast<double>(n_traj);
}

}  // namespace

TrajectoryRecord trajectory_sample(const GateSchedule& schedule,
                                   const Vector& psi0, std::uint64_t seed,
                                   std::uint64_t stream_id,
                                   bool monitor_top_level) {
  std::vector<SegmentPlan> plans = build_plans(schedule);
  Vector psi = checked_state(psi0, schedule.dim());
  return run_plans(plans, psi, RngStream(seed, stream_id), monitor_top_level);
}

ProcessMatrix trajectory_channel_estimate(const GateSchedule& schedule,
                                          std::size_t n_traj,
                                          std::uint64_t seed, int n_threads) {
  if (n_traj < 1) throw ValidationError("need at least one trajectory");
  if (n_threads < 1) throw ValidationError("thread count must be positive");
  std::vector<SegmentPlan> plans = build_plans(schedule);
  const Eigen::Index d = schedule.dim();
  const int n_qubits = qubit_count_for_dim(d);

  // Spanning pure inputs: d basis states, then the two superpositions for
  // every ordered pair j < k.
  std::vector<Vector> inputs;
  inputs.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector v = Vector::Zero(d);
    v[j] = 1.0;
    inputs.push_back(std::move(v));
  }
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index k = j + 1; k < d; ++k) {
      Vector x = Vector::Zero(d);
      x[j] = r;
      x[k] = r;
      inputs.push_back(std::move(x));
      Vector y = Vector::Zero(d);
      y[j] = r;
      y[k] = Complex(0.0, r);
      inputs.push_back(std::move(y));
      pairs.emplace_back(j, k);
    }

  std::vector<Matrix> outputs(inputs.size());
  for (std::size_t idx = 0; idx < inputs.size(); ++idx)
    outputs[idx] = estimate_output(plans, inputs[idx], seed,
                                   static_cast<std::uint64_t>(idx) * n_traj,
                                   n_traj, n_threads);

  // Assemble the superoperator column by column: the channel applied to
  // |j><k| follows from the four pure-input images.
  Matrix s = Matrix::Zero(d * d, d * d);
  auto set_column = [&](Eigen::Index j, Eigen::Index k, const Matrix& image) {
    s.col(k * d + j) =
        Eigen::Map<const Vector>(image.data(), image.size());
  };
  for (Eigen::Index j = 0; j < d; ++j) set_column(j, j, outputs[j]);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto [j, k] = pairs[p];
    const Matrix& ex = outputs[d + 2 * p];
    const Matrix& ey = outputs[d + 2 * p + 1];
    Matrix image = ex + Complex(0.0, 1.0) * ey -
                   Complex(0.5, 0.5) * (outputs[j] + outputs[k]);
    set_column(j, k, image);
    Matrix flipped = image.adjoint();
    set_column(k, j, flipped);
  }
  return chi_from_superoperator(s, n_qubits);
}

Matrix fock_annihilation(int n_max) {
  if (n_max < 1) throw ValidationError("Fock truncation needs n_max >= 1");
  Eigen::Index d = n_max + 1;
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index n = 1; n < d; ++n)
    a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

Vector fock_coherent_state(Complex amplitude, int n_max, double leakage_tol) {
  if (n_max < 1) throw ValidationError("Fock truncation needs n_max >= 1");
  Eigen::Index d = n_max + 1;
  Vector v(d);
  v[0] = std::exp(-0.5 * std::norm(amplitude));
  for (Eigen::Index n = 1; n < d; ++n)
    v[n] = v[n - 1] * amplitude / std::sqrt(static_cast<double>(n));
  double kept = v.squaredNorm();
  if (1.0 - kept > leakage_tol)
    throw ValidationError("coherent state leaks " +
                          std::to_string(1.0 - kept) +
                          " past the n_max = " + std::to_string(n_max) +
                          " truncation");
  return v / std::sqrt(kept);
}

}  // namespace chi
