#pragma once

#include <memory>
#include <vector>

#include "modrl/common/types.hpp"
#include "modrl/envs/env.hpp"

namespace modrl::envs {

struct VecStepResult {
  Matrix observations;  // num_envs x obs_dim, already reset where done
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<Info> infos;  // terminal_observation set for finished copies
};

// Independent copies of one environment stepped in lockstep. Copy i is
// seeded with spec.seed + i. Finished copies are reset inside step().
class VecEnv {
 public:
  VecEnv(const EnvSpec& spec, std::size_t num_envs);

  std::size_t num_envs() const { return envs_.size(); }
  std::size_t observation_dim() const { return envs_.front()->observation_dim(); }
  const ActionSpace& action_space() const { return envs_.front()->action_space(); }
  std::optional<GoalSpace> goal_space() const { return envs_.front()->goal_space(); }
  const EnvSpec& spec() const { return spec_; }

  Matrix reset();
  Matrix observations() const;
  // actions: num_envs x action_space().width()
  VecStepResult step(const Matrix& actions);

  Env& env(std::size_t i) { return *envs_.at(i); }

  void save_state(ByteWriter& w) const;
  void load_state(ByteReader& r);

 private:
  EnvSpec spec_;
  std::vector<std::unique_ptr<Env>> envs_;
};

std::unique_ptr<VecEnv> vecenv_make(const EnvSpec& spec, std::size_t num_envs);

}  // namespace modrl::envs
