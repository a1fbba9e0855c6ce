#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "chi/lindblad.hpp"
#include "chi/process.hpp"
#include "chi/types.hpp"

namespace chi {

// One jump/no-jump unraveling of a schedule: a pure state threaded through
// stochastic jumps. weight is 1 for plain Monte-Carlo averaging.
struct TrajectoryRecord {
  Vector final_state;
  std::vector<std::pair<double, std::size_t>> jumps;  // (time, channel index)
  double weight = 1.0;
};

// Samples one trajectory with stream (seed, stream_id). Sub-steps are sized
// from the channel operator norms so every per-step jump probability stays
// below 1e-3 regardless of the state. A jump applies B_k and renormalizes;
// the no-jump branch applies 1 - (dt/2) sum_k Gamma_k B_k^dag B_k and
// renormalizes; the segment Hamiltonian advances by exact half-step
// exponentials around the stochastic update. With monitor_top_level set,
// the population of the last basis state must stay below 1e-6 (guard for
// truncated Fock spaces).
TrajectoryRecord trajectory_sample(const GateSchedule& schedule,
                                   const Vector& psi0, std::uint64_t seed,
                                   std::uint64_t stream_id = 0,
                                   bool monitor_top_level = false);

// Monte-Carlo chi estimate: n_traj trajectories for each of the d^2 spanning
// input states |j>, (|j>+|k>)/sqrt2, (|j>+i|k>)/sqrt2, averaged into a
// superoperator and inverted. Trajectory i of input j always draws from
// stream (seed, j*n_traj + i) and block sums are added in a fixed order, so
// the result is bit-identical for any thread count.
ProcessMatrix trajectory_channel_estimate(const GateSchedule& schedule,
                                          std::size_t n_traj,
                                          std::uint64_t seed,
                                          int n_threads = 1);

// Annihilation operator on a Fock space truncated at n_max (dim n_max + 1).
Matrix fock_annihilation(int n_max);

// Coherent state truncated at n_max; rejects truncations that drop more
// than leakage_tol of the norm.
Vector fock_coherent_state(Complex amplitude, int n_max,
                           double leakage_tol = 1e-6);

}  // namespace chi
