#pragma once

// Process-tomography harness: simulate the full prepare/evolve/measure
// experiment with finite statistics and reconstruct chi by linear inversion,
// so the error-analysis pipeline can be fed realistic inputs.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chi/error_matrix.hpp"
#include "chi/lindblad.hpp"
#include "chi/process.hpp"
#include "chi/spam.hpp"
#include "chi/types.hpp"

namespace chi {

// shots value meaning "store exact Born probabilities, no sampling".
inline constexpr std::size_t kExactShots = 0;

// Per-qubit measurement axes.
inline constexpr int kAxisX = 0;
inline constexpr int kAxisY = 1;
inline constexpr int kAxisZ = 2;

struct TomographySetup {
  int n_qubits = 1;
  std::size_t shots = kExactShots;
  std::vector<Matrix> input_states;        // 4^N density matrices
  std::vector<std::vector<int>> settings;  // 3^N axis words, leftmost first
};

// The standard product set: inputs {|0>, |1>, |+>, |+i>}^N (base-4 digits,
// leftmost qubit slowest) and settings {X, Y, Z}^N (base-3 digits, same
// order as every other index in the library).
TomographySetup default_tomography_setup(int n_qubits,
                                         std::size_t shots = kExactShots);

// Dimensions, density-matrix validity, axis codes, and spanning inputs
// (full-rank Gram matrix). Throws ValidationError.
void validate_setup(const TomographySetup& setup);

struct TomographyRecord {
  std::size_t input = 0;
  std::size_t setting = 0;
  std::vector<double> frequencies;  // 2^N outcomes, sum 1 within 1e-12
};

struct TomographyDataset {
  int n_qubits = 1;
  std::size_t shots = kExactShots;
  std::uint64_t seed = 0;
  std::vector<TomographyRecord> records;  // complete (input, setting) grid
};

// Born statistics of chi_meas . channel . chi_prep on every (input, setting)
// pair. Outcome k is the computational index after the per-qubit rotation
// (X: H, Y: H diag(1,-i), Z: none), so bit 0 of a qubit means +1. Finite
// shots draw one multinomial per record from the stream
// (seed, input * n_settings + setting); results are therefore independent
// of the thread count.
TomographyDataset simulate_dataset(const ProcessMatrix& channel,
                                   const SpamModel& spam,
                                   const TomographySetup& setup,
                                   std::uint64_t seed, int n_threads = 1);

// State tomography of one input's output: averages every compatible setting
// for each Pauli expectation and assembles rho = sum_p <E_p> E_p / d.
Matrix reconstruct_output_state(const TomographyDataset& dataset,
                                const TomographySetup& setup,
                                std::size_t input_index);

enum class ReconstructionMode {
  kLinearInversion,  // min-norm least squares; may be slightly non-positive
  kProjected,        // clip negative eigenvalues, renormalize the trace
};

// Inverts sum_mn chi_mn E_m rho_i E_n^dag = rho_fin,i over the full record
// grid. Throws NumericalError when the inputs do not determine chi.
ProcessMatrix reconstruct_chi(
    const TomographyDataset& dataset, const TomographySetup& setup,
    ReconstructionMode mode = ReconstructionMode::kLinearInversion);

enum class ExtractionRoute {
  kTransformChi,  // reconstruct the channel, then change the Pauli frame
  kTransformRho,  // conjugate each output state by U^dag before inversion
};

// simulate -> reconstruct -> error matrix, end to end. The rho route lands
// directly in the before-gate convention and is converted on request; both
// routes agree to reconstruction accuracy but stress different code paths.
ErrorMatrix run_qpt_experiment(
    const ProcessMatrix& channel, const Matrix& u_desired,
    const SpamModel& spam, const TomographySetup& setup, std::size_t shots,
    std::uint64_t seed, ExtractionRoute route = ExtractionRoute::kTransformChi,
    ErrorConvention convention = ErrorConvention::ErrorAfter,
    ReconstructionMode mode = ReconstructionMode::kLinearInversion);

// Perfect-unitary gate.
ErrorMatrix run_qpt_experiment(
    const Matrix& u, const SpamModel& spam, const TomographySetup& setup,
    std::size_t shots, std::uint64_t seed,
    ExtractionRoute route = ExtractionRoute::kTransformChi,
    ErrorConvention convention = ErrorConvention::ErrorAfter,
    ReconstructionMode mode = ReconstructionMode::kLinearInversion);

// Simulated hardware gate: the channel is the exact master-equation solution
// of the schedule, compared against the supplied desired unitary.
ErrorMatrix run_qpt_experiment(
    const GateSchedule& schedule, const Matrix& u_desired,
    const SpamModel& spam, const TomographySetup& setup, std::size_t shots,
    std::uint64_t seed, ExtractionRoute route = ExtractionRoute::kTransformChi,
    ErrorConvention convention = ErrorConvention::ErrorAfter,
    ReconstructionMode mode = ReconstructionMode::kLinearInversion);

}  // namespace chi
