#include "chi/tomo.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

#include "chi/compose.hpp"
#include "chi/pauli.hpp"
#include "chi/rng.hpp"

namespace chi {

namespace {

Matrix axis_rotation(int axis) {
  const double r = 1.0 / std::sqrt(2.0);
  Matrix m(2, 2);
  switch (axis) {
    case kAxisX:  // Hadamard
      m << r, r, r, -r;
      return m;
    case kAxisY:  // Hadamard after S^dag: +Y eigenstate -> |0>
      m << r, Complex(0, -r), r, Complex(0, r);
      return m;
    case kAxisZ:
      return Matrix::Identity(2, 2);
    default:
      throw ValidationError("measurement axis must be 0 (X), 1 (Y) or 2 (Z)");
  }
}

Matrix setting_rotation(const std::vector<int>& axes) {
  Matrix r = axis_rotation(axes.front());
  for (std::size_t q = 1; q < axes.size(); ++q)
    r = Eigen::kroneckerProduct(r, axis_rotation(axes[q])).eval();
  return r;
}

// +1/-1 product over the non-identity positions of Pauli word p for
// computational outcome k (leftmost qubit = most significant bit).
double outcome_sign(std::size_t k, std::size_t p, int n_qubits) {
  double sign = 1.0;
  for (int q = n_qubits - 1; q >= 0; --q) {
    if (p % 4 != 0 && ((k >> (n_qubits - 1 - q)) & 1)) sign = -sign;
    p /= 4;
  }
  return sign;
}

// Does the setting j measure Pauli word p directly (every non-identity
// letter of p on the matching axis)?
bool setting_covers(const std::vector<int>& axes, std::size_t p, int n) {
  for (int q = n - 1; q >= 0; --q) {
    int digit = static_cast<int>(p % 4);
    if (digit != 0 && digit != axes[q] + 1) return false;
    p /= 4;
  }
  return true;
}

void check_grid(const TomographyDataset& dataset,
                const TomographySetup& setup) {
  const std::size_t n_in = setup.input_states.size();
  const std::size_t n_set = setup.settings.size();
  const std::size_t outcomes = pauli_dim(setup.n_qubits);
  if (dataset.n_qubits != setup.n_qubits)
    throw ValidationError("dataset and setup disagree on the qubit count");
  if (dataset.records.size() != n_in * n_set)
    throw ValidationError("dataset does not cover the full record grid");
  std::vector<char> seen(n_in * n_set, 0);
  for (const TomographyRecord& rec : dataset.records) {
    if (rec.input >= n_in || rec.setting >= n_set)
      throw ValidationError("record indexes outside the setup");
    std::size_t slot = rec.input * n_set + rec.setting;
    if (seen[slot]) throw ValidationError("duplicate record in dataset");
    seen[slot] = 1;
    if (rec.frequencies.size() != outcomes)
      throw ValidationError("record has the wrong number of outcomes");
    double sum = 0.0;
    for (double f : rec.frequencies) {
      if (!(f >= -1e-12))
        throw ValidationError("negative outcome frequency in dataset");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw ValidationError("record frequencies do not sum to one");
  }
}

// Solve sum_mn chi_mn E_m rho_i E_n = out_i for chi by min-norm least
// squares over all inputs. The system matrix depends only on the setup.
ProcessMatrix solve_chi(const TomographySetup& setup,
                        const std::vector<Matrix>& outputs,
                        ReconstructionMode mode) {
  const int n = setup.n_qubits;
  const Eigen::Index d = static_cast<Eigen::Index>(pauli_dim(n));
  const Eigen::Index p4 = static_cast<Eigen::Index>(pauli_count(n));
  const Eigen::Index n_in = static_cast<Eigen::Index>(setup.input_states.size());

  Matrix system(n_in * p4, p4 * p4);
  Vector rhs(n_in * p4);
  std::vector<Matrix> left(static_cast<std::size_t>(n_in * p4),
                           Matrix(d, d));
  for (Eigen::Index i = 0; i < n_in; ++i)
    for (Eigen::Index m = 0; m < p4; ++m)
      left[static_cast<std::size_t>(i * p4 + m)] =
          pauli_op(static_cast<std::size_t>(m), n) * setup.input_states[i];
  for (Eigen::Index c = 0; c < p4 * p4; ++c) {
    const Eigen::Index m = c % p4;
    const Eigen::Index nn = c / p4;
    const Matrix& e_n = pauli_op(static_cast<std::size_t>(nn), n);
    for (Eigen::Index i = 0; i < n_in; ++i) {
      Matrix term = left[static_cast<std::size_t>(i * p4 + m)] * e_n;
      system.block(i * p4, c, p4, 1) = Eigen::Map<const Vector>(term.data(), p4);
    }
  }
  for (Eigen::Index i = 0; i < n_in; ++i)
    rhs.segment(i * p4, p4) =
        Eigen::Map<const Vector>(outputs[static_cast<std::size_t>(i)].data(),
                                 p4);

  Eigen::BDCSVD<Matrix> svd(system,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  if (svd.rank() < p4 * p4)
    throw NumericalError(
        "tomography inputs do not determine chi (rank " +
        std::to_string(svd.rank()) + " of " + std::to_string(p4 * p4) + ")");
  Vector x = svd.solve(rhs);

  ProcessMatrix chi_mat;
  chi_mat.n_qubits = n;
  chi_mat.m = Eigen::Map<const Matrix>(x.data(), p4, p4);
  chi_mat.m = 0.5 * (chi_mat.m + chi_mat.m.adjoint()).eval();

  if (mode == ReconstructionMode::kProjected) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(chi_mat.m);
    Vector lam = es.eigenvalues().cast<Complex>();
    double total = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      double v = std::max(lam[i].real(), 0.0);
      lam[i] = v;
      total += v;
    }
    if (total < 1e-12)
      throw NumericalError("projected chi lost its entire trace");
    chi_mat.m = es.eigenvectors() * (lam / total).asDiagonal() *
                es.eigenvectors().adjoint();
  }
  return chi_mat;
}

std::vector<Matrix> all_output_states(const TomographyDataset& dataset,
                                      const TomographySetup& setup) {
  std::vector<Matrix> outputs;
  outputs.reserve(setup.input_states.size());
  for (std::size_t i = 0; i < setup.input_states.size(); ++i)
    outputs.push_back(reconstruct_output_state(dataset, setup, i));
  return outputs;
}

}  // namespace

TomographySetup default_tomography_setup(int n_qubits, std::size_t shots) {
  if (n_qubits < 1) throw ValidationError("need at least one qubit");
  TomographySetup setup;
  setup.n_qubits = n_qubits;
  setup.shots = shots;

  const double r = 1.0 / std::sqrt(2.0);
  std::vector<Vector> kets(4, Vector(2));
  kets[0] << 1, 0;                      // |0>
  kets[1] << 0, 1;                      // |1>
  kets[2] << r, r;                      // |+>
  kets[3] << r, Complex(0, r);          // |+i>

  std::size_t n_inputs = pauli_count(n_qubits);  // 4^N
  for (std::size_t idx = 0; idx < n_inputs; ++idx) {
    Vector ket = Vector::Ones(1);
    std::size_t rem = idx;
    std::size_t place = n_inputs / 4;
    for (int q = 0; q < n_qubits; ++q) {
      ket = Eigen::kroneckerProduct(ket, kets[rem / place]).eval();
      rem %= place;
      place /= 4;
    }
    setup.input_states.push_back(Matrix(ket * ket.adjoint()));
  }

  std::size_t n_settings = 1;
  for (int q = 0; q < n_qubits; ++q) n_settings *= 3;
  for (std::size_t idx = 0; idx < n_settings; ++idx) {
    std::vector<int> axes(static_cast<std::size_t>(n_qubits));
    std::size_t rem = idx;
    std::size_t place = n_settings / 3;
    for (int q = 0; q < n_qubits; ++q) {
      axes[static_cast<std::size_t>(q)] = static_cast<int>(rem / place);
      rem %= place;
      place /= 3;
    }
    setup.settings.push_back(std::move(axes));
  }
  return setup;
}

void validate_setup(const TomographySetup& setup) {
  if (setup.n_qubits < 1) throw ValidationError("need at least one qubit");
  const Eigen::Index d = static_cast<Eigen::Index>(pauli_dim(setup.n_qubits));
  if (setup.input_states.empty() || setup.settings.empty())
    throw ValidationError("setup needs input states and settings");
  for (const Matrix& rho : setup.input_states) {
    if (rho.rows() != d || rho.cols() != d)
      throw ValidationError("input state has the wrong dimension");
    validate_density_matrix(rho, 1e-9);
  }
  for (const std::vector<int>& axes : setup.settings) {
    if (axes.size() != static_cast<std::size_t>(setup.n_qubits))
      throw ValidationError("setting length does not match the qubit count");
    for (int a : axes)
      if (a < kAxisX || a > kAxisZ)
        throw ValidationError("measurement axis must be 0 (X), 1 (Y) or 2 (Z)");
  }

  // The inputs must span operator space or chi is not identifiable.
  const std::size_t n_in = setup.input_states.size();
  Matrix gram(static_cast<Eigen::Index>(n_in), static_cast<Eigen::Index>(n_in));
  for (std::size_t i = 0; i < n_in; ++i)
    for (std::size_t j = 0; j < n_in; ++j)
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          (setup.input_states[i].adjoint() * setup.input_states[j]).trace();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  double lam_min = es.eigenvalues().minCoeff();
  double lam_max = es.eigenvalues().maxCoeff();
  if (n_in < pauli_count(setup.n_qubits) || lam_min <= 1e-12 * lam_max)
    throw ValidationError("input states do not span the operator space");

  // Every Pauli word needs at least one compatible setting or the
  // reconstruction has blind directions.
  for (std::size_t p = 1; p < pauli_count(setup.n_qubits); ++p) {
    bool covered = false;
    for (const std::vector<int>& axes : setup.settings)
      if (setting_covers(axes, p, setup.n_qubits)) {
        covered = true;
        break;
      }
    if (!covered)
      throw ValidationError(
          "measurement settings do not cover the Pauli basis, e.g. " +
          pauli_label(p, setup.n_qubits));
  }
}

TomographyDataset simulate_dataset(const ProcessMatrix& channel,
                                   const SpamModel& spam,
                                   const TomographySetup& setup,
                                   std::uint64_t seed, int n_threads) {
  validate_setup(setup);
  validate_process_matrix(channel);
  if (channel.n_qubits != setup.n_qubits)
    throw ValidationError("channel and setup disagree on the qubit count");
  if (!is_trace_preserving(channel, 1e-8))
    throw ValidationError("simulated channel must be trace preserving");
  validate_spam_model(spam);
  if (spam.chi_prep.m.rows() != channel.m.rows())
    throw ValidationError("spam model dimension does not match the channel");
  if (n_threads < 1) throw ValidationError("thread count must be positive");

  ProcessMatrix effective =
      compose_exact(spam.chi_meas, compose_exact(channel, spam.chi_prep));

  const std::size_t n_set = setup.settings.size();
  const std::size_t outcomes = pauli_dim(setup.n_qubits);

  std::vector<Matrix> rotations;
  rotations.reserve(n_set);
  for (const std::vector<int>& axes : setup.settings)
    rotations.push_back(setting_rotation(axes));

  TomographyDataset dataset;
  dataset.n_qubits = setup.n_qubits;
  dataset.shots = setup.shots;
  dataset.seed = seed;
  dataset.records.resize(setup.input_states.size() * n_set);

  auto fill_record = [&](std::size_t slot) {
    const std::size_t i = slot / n_set;
    const std::size_t j = slot % n_set;
    Matrix out = apply_channel(effective, setup.input_states[i], false);
    Matrix rotated = rotations[j] * out * rotations[j].adjoint();

    std::vector<double> p(outcomes);
    double total = 0.0;
    for (std::size_t k = 0; k < outcomes; ++k) {
      double v = rotated(static_cast<Eigen::Index>(k),
                         static_cast<Eigen::Index>(k))
                     .real();
      if (v < -1e-9)
        throw NumericalError("negative Born probability in simulation");
      p[k] = std::max(v, 0.0);
      total += p[k];
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw NumericalError("Born probabilities do not sum to one");
    for (double& v : p) v /= total;

    TomographyRecord rec;
    rec.input = i;
    rec.setting = j;
    if (setup.shots == kExactShots) {
      rec.frequencies = std::move(p);
    } else {
      std::vector<std::size_t> counts(outcomes, 0);
      RngStream rng(seed, slot);
      for (std::size_t s = 0; s < setup.shots; ++s) {
        double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = outcomes - 1;
        for (std::size_t k = 0; k < outcomes; ++k) {
          acc += p[k];
          if (u < acc) {
            pick = k;
            break;
          }
        }
        ++counts[pick];
      }
      rec.frequencies.resize(outcomes);
      for (std::size_t k = 0; k < outcomes; ++k)
        rec.frequencies[k] = static_cast<double>(counts[k]) /
                             static_cast<double>(setup.shots);
    }
    dataset.records[slot] = std::move(rec);
  };

  const std::size_t n_records = dataset.records.size();
  std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(n_threads), n_records);
  if (workers <= 1) {
    for (std::size_t slot = 0; slot < n_records; ++slot) fill_record(slot);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t slot = w; slot < n_records; slot += workers)
            fill_record(slot);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return dataset;
}

Matrix reconstruct_output_state(const TomographyDataset& dataset,
                                const TomographySetup& setup,
                                std::size_t input_index) {
  validate_setup(setup);
  check_grid(dataset, setup);
  if (input_index >= setup.input_states.size())
    throw ValidationError("input index outside the setup");

  const int n = setup.n_qubits;
  const std::size_t n_set = setup.settings.size();
  const std::size_t p4 = pauli_count(n);
  const std::size_t outcomes = pauli_dim(n);

  // Records indexed by setting for this input.
  std::vector<const TomographyRecord*> by_setting(n_set, nullptr);
  for (const TomographyRecord& rec : dataset.records)
    if (rec.input == input_index) by_setting[rec.setting] = &rec;

  Vector coeffs = Vector::Zero(static_cast<Eigen::Index>(p4));
  coeffs[0] = 1.0;  // <identity> by normalization
  for (std::size_t p = 1; p < p4; ++p) {
    double sum = 0.0;
    int hits = 0;
    for (std::size_t j = 0; j < n_set; ++j) {
      if (!setting_covers(setup.settings[j], p, n)) continue;
      const TomographyRecord& rec = *by_setting[j];
      double value = 0.0;
      for (std::size_t k = 0; k < outcomes; ++k)
        value += rec.frequencies[k] * outcome_sign(k, p, n);
      sum += value;
      ++hits;
    }
    // Every word is covered: settings exhaust {X,Y,Z}^N.
    coeffs[static_cast<Eigen::Index>(p)] = sum / static_cast<double>(hits);
  }
  double d = static_cast<double>(pauli_dim(n));
  return pauli_reconstruct(coeffs / d, n);
}

ProcessMatrix reconstruct_chi(const TomographyDataset& dataset,
                              const TomographySetup& setup,
                              ReconstructionMode mode) {
  validate_setup(setup);
  check_grid(dataset, setup);
  return solve_chi(setup, all_output_states(dataset, setup), mode);
}

ErrorMatrix run_qpt_experiment(const ProcessMatrix& channel,
                               const Matrix& u_desired, const SpamModel& spam,
                               const TomographySetup& setup, std::size_t shots,
                               std::uint64_t seed, ExtractionRoute route,
                               ErrorConvention convention,
                               ReconstructionMode mode) {
  TomographySetup local = setup;
  local.shots = shots;
  validate_unitary(u_desired);
  TomographyDataset dataset = simulate_dataset(channel, spam, local, seed);

  if (route == ExtractionRoute::kTransformChi) {
    ProcessMatrix rec = reconstruct_chi(dataset, local, mode);
    return to_error_matrix(rec, u_desired, convention);
  }

  // Transform-rho route: conjugating every measured output by U^dag turns
  // the reconstruction directly into the before-gate error process.
  std::vector<Matrix> outputs = all_output_states(dataset, local);
  for (Matrix& out : outputs)
    out = (u_desired.adjoint() * out * u_desired).eval();
  ErrorMatrix err;
  err.chi = solve_chi(local, outputs, mode);
  err.convention = ErrorConvention::ErrorBefore;
  err.reference_unitary = u_desired;
  if (convention == ErrorConvention::ErrorBefore) return err;
  return convert_convention(err);
}

ErrorMatrix run_qpt_experiment(const Matrix& u, const SpamModel& spam,
                               const TomographySetup& setup, std::size_t shots,
                               std::uint64_t seed, ExtractionRoute route,
                               ErrorConvention convention,
                               ReconstructionMode mode) {
  return run_qpt_experiment(chi_from_unitary(u), u, spam, setup, shots, seed,
                            route, convention, mode);
}

ErrorMatrix run_qpt_experiment(const GateSchedule& schedule,
                               const Matrix& u_desired, const SpamModel& spam,
                               const TomographySetup& setup, std::size_t shots,
                               std::uint64_t seed, ExtractionRoute route,
                               ErrorConvention convention,
                               ReconstructionMode mode) {
  return run_qpt_experiment(exact_channel_chi(schedule), u_desired, spam,
                            setup, shots, seed, route, convention, mode);
}

}  // namespace chi
