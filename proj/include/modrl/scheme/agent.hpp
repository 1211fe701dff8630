#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "modrl/actors/off_policy_actor.hpp"
#include "modrl/actors/on_policy_actor.hpp"
#include "modrl/algos/config.hpp"
#include "modrl/algos/losses.hpp"
#include "modrl/algos/updater.hpp"
#include "modrl/common/binary_io.hpp"
#include "modrl/envs/vec_env.hpp"
#include "modrl/funcapprox/mlp.hpp"
#include "modrl/storage/config.hpp"
#include "modrl/storage/replay.hpp"
#include "modrl/storage/rollout.hpp"

namespace modrl::scheme {

// Everything needed to build identical agent components in any worker.
struct AgentConfig {
  envs::EnvSpec env;
  std::size_t num_envs = 1;
  std::vector<std::size_t> hidden = {64, 64};
  funcapprox::Activation activation = funcapprox::Activation::kTanh;
  double initial_log_std = 0.0;
  algos::AlgoConfig algo;
  storage::StorageConfig storage;
  std::uint64_t seed = 0;

  // Rejects mixed on-policy / off-policy component families.
  void validate() const;
};

// Context shared by every worker during one cycle.
struct CycleContext {
  double progress = 0.0;            // env steps at cycle start / target steps, in [0, 1]
  std::size_t global_env_steps = 0;  // env steps at cycle start
};

// Message from a collection worker to its gradient worker.
struct CollectedData {
  std::size_t worker = 0;
  bool retired = false;  // the sender will not produce more data
  Version collected_with_version = 0;
  std::size_t env_steps = 0;
  bool preempted = false;
  std::optional<storage::Rollout> rollout;
  std::vector<storage::ReplayEntry> transitions;
  std::vector<std::vector<storage::ReplayEntry>> episodes;  // complete episodes (HER)
  std::vector<double> episode_rewards;
  std::vector<double> episode_successes;
};

// Algorithm-aware environment interaction owned by one collection worker.
class Collector {
 public:
  virtual ~Collector() = default;

  virtual void set_params(const funcapprox::ParamVector& params) = 0;
  virtual const funcapprox::ParamVector& params() const = 0;
  // Vectorized steps per full cycle; env transitions per cycle = that * num_envs().
  virtual std::size_t steps_per_cycle() const = 0;
  virtual std::size_t num_envs() const = 0;
  std::size_t env_steps_per_cycle() const { return steps_per_cycle() * num_envs(); }

  virtual void begin(const CycleContext& ctx) = 0;
  virtual void step() = 0;
  virtual std::size_t steps_done() const = 0;
  // Closes the cycle; a cycle cut short is bootstrapped at the truncation point.
  virtual CollectedData finish() = 0;

  // Runs begin / steps_per_cycle() x step / finish.
  CollectedData collect(const CycleContext& ctx);

  virtual void save_state(ByteWriter& w) const = 0;
  virtual void load_state(ByteReader& r) = 0;
};

// Algorithm-aware storage + loss computation owned by one gradient worker.
class GradientComputer {
 public:
  virtual ~GradientComputer() = default;

  virtual void set_params(const funcapprox::ParamVector& params) = 0;
  virtual const funcapprox::ParamVector& params() const = 0;

  virtual void ingest(std::vector<CollectedData> data, const CycleContext& ctx) = 0;
  // Fixed number of gradients per ingest, so sync reduction rounds line up.
  virtual std::size_t gradients_per_round() const = 0;
  // Uses the current local params. An empty gradient means "nothing to
  // contribute" (e.g. a cold replay buffer) and is skipped by reducers.
  virtual algos::StepOutput next_gradient(const CycleContext& ctx) = 0;

  virtual void save_state(ByteWriter& w) const = 0;
  virtual void load_state(ByteReader& r) = 0;
};

// Deterministic greedy policy in environment action units.
using Policy = std::function<Matrix(const Matrix& obs)>;

inline constexpr std::uint64_t kCollectionStream = 0xC011EC7;
inline constexpr std::uint64_t kGradientStream = 0x6AAD1E47;

std::uint64_t collection_env_seed(std::uint64_t seed, std::size_t worker, std::size_t num_envs);

class AgentFactories {
 public:
  explicit AgentFactories(AgentConfig config);

  const AgentConfig& config() const { return config_; }
  bool on_policy() const { return algos::is_on_policy(config_.algo.kind); }
  std::size_t obs_dim() const { return obs_dim_; }
  const envs::ActionSpace& action_space() const { return action_space_; }

  std::unique_ptr<envs::VecEnv> make_env(std::uint64_t seed) const;
  funcapprox::ParamVector initial_params() const;
  std::vector<funcapprox::MlpSpec> networks() const;
  algos::Updater make_updater() const;
  std::unique_ptr<Collector> make_collector(std::size_t worker) const;
  std::unique_ptr<GradientComputer> make_gradient_computer(std::size_t worker) const;
  Policy make_policy(const funcapprox::ParamVector& params) const;

  actors::OnPolicyActorConfig on_policy_actor_config() const;
  actors::OffPolicyActorConfig off_policy_actor_config() const;

 private:
  AgentConfig config_;
  std::size_t obs_dim_ = 0;
  envs::ActionSpace action_space_;
  std::optional<envs::GoalSpace> goal_space_;
};

}  // namespace modrl::scheme
