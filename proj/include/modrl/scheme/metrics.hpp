#pragma once

#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include "modrl/algos/losses.hpp"
#include "modrl/funcapprox/mlp.hpp"

namespace modrl::scheme {

enum class LagKind { kPolicyLag, kGradientAsynchrony };

struct LagSample {
  LagKind kind = LagKind::kPolicyLag;
  std::uint64_t delta = 0;
};

struct LagSummary {
  double policy_lag = 0.0;
  double grad_async = 0.0;
  std::size_t policy_lag_samples = 0;
  std::size_t grad_async_samples = 0;
};

// Means over the given window (0 when a kind has no samples).
LagSummary lag_metrics(std::span<const LagSample> samples);

// PL = computed - data_collected, GA = applied_at - computed. Throws
// ContractViolation when the causal order data <= computed <= applied_at fails.
std::vector<LagSample> lag_samples(const funcapprox::Gradient& g, Version applied_at);

struct MetricsWindow {
  std::uint64_t env_steps = 0;  // cumulative
  std::uint64_t updates = 0;    // cumulative
  std::uint64_t dropped_gradients = 0;  // cumulative
  std::vector<LagSample> lags;
  std::vector<double> episode_rewards;
  std::vector<double> episode_successes;
  algos::LossStats loss;  // mean over the window
  std::size_t loss_count = 0;
  std::vector<double> cycle_seconds;
};

// Thread-safe accumulator the runtime writes and the learner drains.
class MetricsSink {
 public:
  explicit MetricsSink(std::uint64_t env_steps = 0, std::uint64_t updates = 0)
      : env_steps_(env_steps), updates_(updates) {}

  void add_env_steps(std::uint64_t n);
  void add_update(std::span<const LagSample> lags);
  void add_dropped();
  void add_episodes(std::span<const double> rewards, std::span<const double> successes);
  void add_loss(const algos::LossStats& s);
  void add_cycle_time(double seconds);

  // Resets the cumulative counters, e.g. after loading a checkpoint.
  void restore(std::uint64_t env_steps, std::uint64_t updates);

  std::uint64_t env_steps() const;
  std::uint64_t updates() const;
  // Returns and clears the window; cumulative counters are kept.
  MetricsWindow drain();

 private:
  mutable std::mutex mu_;
  std::uint64_t env_steps_;
  std::uint64_t updates_;
  std::uint64_t dropped_ = 0;
  MetricsWindow window_;
  algos::LossStats loss_sum_;
};

}  // namespace modrl::scheme
