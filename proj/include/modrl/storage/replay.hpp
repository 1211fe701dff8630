#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "modrl/common/binary_io.hpp"
#include "modrl/common/rng.hpp"
#include "modrl/common/types.hpp"
#include "modrl/envs/env.hpp"

namespace modrl::storage {

struct ReplayEntry {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;  // true termination only; time-limit cuts keep done = false
  std::vector<double> goal;           // desired goal (goal-conditioned envs)
  std::vector<double> achieved_goal;  // goal achieved in next_obs

  bool has_goal() const { return !goal.empty() && !achieved_goal.empty(); }
  friend bool operator==(const ReplayEntry&, const ReplayEntry&) = default;
};

struct ReplayBatch {
  Matrix obs;
  Matrix actions;
  std::vector<double> rewards;
  Matrix next_obs;
  std::vector<std::uint8_t> dones;

  std::size_t size() const { return rewards.size(); }
};

ReplayBatch make_batch(std::span<const ReplayEntry* const> entries);

// Ring buffer with FIFO eviction and seeded uniform sampling (with replacement).
class ReplayBuffer {
 public:
  static constexpr std::size_t kDefaultCapacity = 100000;

  explicit ReplayBuffer(std::size_t capacity = kDefaultCapacity, std::uint64_t seed = 0);

  void insert(ReplayEntry entry);
  void insert(std::span<const ReplayEntry> entries);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Oldest first.
  const ReplayEntry& at(std::size_t i) const { return entries_.at(i); }

  // std::nullopt while fewer than batch_size entries are stored.
  std::optional<std::vector<std::size_t>> sample_indices(std::size_t batch_size);
  std::optional<ReplayBatch> sample(std::size_t batch_size);

  void save_state(ByteWriter& w) const;
  void load_state(ByteReader& r);

 private:
  std::size_t capacity_;
  std::deque<ReplayEntry> entries_;
  Rng rng_;
};

enum class HerStrategy { kFinal, kFuture };

std::string to_string(HerStrategy s);
HerStrategy her_strategy_from_string(const std::string& name);

// Each transition is followed by k relabeled copies whose goal is replaced
// by an achieved goal from the same episode; rewards and done flags are
// recomputed with the goal space. The input is never modified.
std::vector<ReplayEntry> her_relabel(std::span<const ReplayEntry> episode, std::size_t k, HerStrategy strategy,
                                     const envs::GoalSpace& goal_space, Rng& rng);

void write_entry(ByteWriter& w, const ReplayEntry& e);
ReplayEntry read_entry(ByteReader& r);

}  // namespace modrl::storage
