#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modrl/common/binary_io.hpp"
#include "modrl/common/types.hpp"

namespace modrl::storage {

// Fixed-horizon batch of transitions. Flat arrays are indexed t * num_envs + e.
struct Rollout {
  std::size_t num_steps = 0;
  std::size_t num_envs = 0;
  Matrix observations;  // (T*E) x obs_dim
  Matrix actions;       // (T*E) x action width
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> value_estimates;
  std::vector<double> behavior_log_probs;
  std::vector<double> bootstrap_values;  // V(s_T) per env
  Version collected_with_version = 0;

  // Filled by a compute pass.
  std::vector<double> returns;
  std::vector<double> advantages;

  std::size_t size() const { return num_steps * num_envs; }
  bool processed() const { return advantages.size() == size() && returns.size() == size(); }
  // Throws ConfigError when array lengths disagree.
  void validate() const;
};

Rollout compute_returns_vanilla(Rollout rollout, double gamma);
Rollout compute_gae(Rollout rollout, double gamma, double lambda);
// returns <- v-trace value targets, advantages <- policy-gradient advantages.
Rollout compute_vtrace(Rollout rollout, std::span<const double> target_log_probs, double gamma,
                       double rho_bar = 1.0, double c_bar = 1.0);

struct MiniBatch {
  std::size_t epoch = 0;
  std::size_t index = 0;
  std::vector<std::size_t> indices;  // into the concatenation of the input rollouts
  Matrix observations;
  Matrix actions;
  std::vector<double> returns;
  std::vector<double> advantages;  // normalized within the batch
  std::vector<double> behavior_log_probs;
  std::vector<double> value_estimates;

  std::size_t size() const { return indices.size(); }
};

// num_epochs passes, each a seeded shuffle split into exactly num_mini_batch
// disjoint batches (sizes differ by at most one; smaller batches come last).
std::vector<MiniBatch> minibatch_epochs(std::span<const Rollout> rollouts, std::size_t num_epochs,
                                        std::size_t num_mini_batch, std::uint64_t seed);
std::vector<MiniBatch> minibatch_epochs(const Rollout& rollout, std::size_t num_epochs, std::size_t num_mini_batch,
                                        std::uint64_t seed);

void normalize_advantages(std::vector<double>& adv, double eps = 1e-8);

void write_rollout(ByteWriter& w, const Rollout& r);
Rollout read_rollout(ByteReader& r);

}  // namespace modrl::storage
