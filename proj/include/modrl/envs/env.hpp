#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modrl/common/binary_io.hpp"
#include "modrl/common/rng.hpp"

namespace modrl::envs {

enum class EnvName { kCartPole, kPendulum, kGridWorld, kBitFlip };

std::string to_string(EnvName name);
EnvName env_name_from_string(const std::string& name);

struct EnvSpec {
  EnvName name = EnvName::kCartPole;
  std::uint64_t seed = 0;
  // Name-specific parameters: "n" (bitflip length), "size" (grid side).
  std::map<std::string, double> extra;

  double param(const std::string& key, double fallback) const;
};

struct ActionSpace {
  enum class Kind { kDiscrete, kContinuous };

  Kind kind = Kind::kDiscrete;
  std::size_t n = 2;  // discrete only
  std::vector<double> low, high;  // continuous only

  static ActionSpace discrete(std::size_t n);
  static ActionSpace continuous(std::vector<double> low, std::vector<double> high);

  bool is_discrete() const { return kind == Kind::kDiscrete; }
  // Number of reals used to encode one action (1 for discrete: the index).
  std::size_t width() const { return is_discrete() ? 1 : low.size(); }
  bool contains(std::span<const double> action) const;
};

// Reserved info keys.
inline constexpr const char* kInfoTruncated = "truncated";
inline constexpr const char* kInfoSuccess = "is_success";
inline constexpr const char* kInfoAchievedGoal = "achieved_goal";
inline constexpr const char* kInfoTerminalObservation = "terminal_observation";

using Info = std::map<std::string, std::vector<double>>;

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  Info info;

  bool truncated() const { return info.contains(kInfoTruncated); }
};

// Goal-conditioned environments embed the desired goal in the observation
// at [goal_offset, goal_offset + goal_dim) and can score any
// (achieved, desired) pair.
struct GoalSpace {
  std::size_t goal_offset = 0;
  std::size_t goal_dim = 0;
  double success_reward = 0.0;
  std::function<double(std::span<const double> achieved, std::span<const double> desired)> reward;
};

class Env {
 public:
  virtual ~Env() = default;

  virtual std::vector<double> reset() = 0;
  virtual StepResult step(std::span<const double> action) = 0;

  virtual const std::vector<double>& observation() const = 0;
  virtual std::size_t observation_dim() const = 0;
  virtual const ActionSpace& action_space() const = 0;
  virtual std::size_t max_episode_steps() const = 0;
  virtual std::optional<GoalSpace> goal_space() const { return std::nullopt; }

  virtual void save_state(ByteWriter& w) const = 0;
  virtual void load_state(ByteReader& r) = 0;
};

// Shared episode bookkeeping: action validation, step cap, terminal guard.
class EpisodicEnv : public Env {
 public:
  EpisodicEnv(std::uint64_t seed, std::size_t obs_dim, ActionSpace space, std::size_t max_steps);

  std::vector<double> reset() final;
  StepResult step(std::span<const double> action) final;

  const std::vector<double>& observation() const final { return obs_; }
  std::size_t observation_dim() const final { return obs_dim_; }
  const ActionSpace& action_space() const final { return space_; }
  std::size_t max_episode_steps() const final { return max_steps_; }

  std::size_t elapsed_steps() const { return steps_; }

  void save_state(ByteWriter& w) const final;
  void load_state(ByteReader& r) final;

 protected:
  struct Transition {
    double reward = 0.0;
    bool terminated = false;
    Info info;
  };

  // Samples an initial state and returns its observation.
  virtual std::vector<double> reset_state() = 0;
  virtual Transition advance(std::span<const double> action) = 0;
  virtual std::vector<double> observe() const = 0;
  virtual std::vector<double> state_vector() const = 0;
  virtual void set_state_vector(const std::vector<double>& s) = 0;

  Rng rng_;

 private:
  std::size_t obs_dim_;
  ActionSpace space_;
  std::size_t max_steps_;
  std::size_t steps_ = 0;
  bool done_ = false;
  std::vector<double> obs_;
};

// Builds the named environment in its post-reset state.
std::unique_ptr<Env> env_make(const EnvSpec& spec);

}  // namespace modrl::envs
