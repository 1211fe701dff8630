#include "modrl/algos/config.hpp"

#include <cmath>

#include "modrl/common/errors.hpp"

namespace modrl::algos {

std::string to_string(AlgoKind k) {
  switch (k) {
    case AlgoKind::kA2c: return "a2c";
    case AlgoKind::kPpo: return "ppo";
    case AlgoKind::kDdqn: return "ddqn";
    case AlgoKind::kSac: return "sac";
  }
  return "?";
}

AlgoKind algo_kind_from_string(const std::string& name) {
  for (auto k : {AlgoKind::kA2c, AlgoKind::kPpo, AlgoKind::kDdqn, AlgoKind::kSac}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown algo '" + name + "' (expected a2c, ppo, ddqn or sac)");
}

std::string to_string(DecayKind k) {
  switch (k) {
    case DecayKind::kNone: return "none";
    case DecayKind::kLinearToZero: return "linear_to_zero";
    case DecayKind::kStepFactors: return "step_factors";
  }
  return "?";
}

DecayKind decay_kind_from_string(const std::string& name) {
  for (auto k : {DecayKind::kNone, DecayKind::kLinearToZero, DecayKind::kStepFactors}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown decay kind '" + name + "' (expected none, linear_to_zero or step_factors)");
}

void AlgoConfig::validate() const {
  require(gamma >= 0.0 && gamma <= 1.0, "algo.gamma must lie in [0, 1]");
  require(clip_param > 0.0, "algo.clip_param must be positive");
  require(entropy_coef >= 0.0 && value_loss_coef >= 0.0, "algo loss coefficients must be non-negative");
  require(lr > 0.0 && lr_q > 0.0 && lr_policy > 0.0 && lr_alpha > 0.0, "algo learning rates must be positive");
  require(max_grad_norm > 0.0, "algo.max_grad_norm must be positive");
  require(num_steps >= 1 && num_epochs >= 1 && num_mini_batch >= 1, "algo num_steps/num_epochs/num_mini_batch >= 1");
  require(batch_size >= 1 && num_updates >= 1 && update_every >= 1, "algo batch_size/num_updates/update_every >= 1");
  require(polyak >= 0.0 && polyak <= 1.0, "algo.polyak must lie in [0, 1]");
  require(!target_tau || (*target_tau >= 0.0 && *target_tau <= 1.0), "algo.target_tau must lie in [0, 1]");
  require(target_update_period >= 1, "algo.target_update_period must be >= 1");
  require(initial_alpha > 0.0, "algo.initial_alpha must be positive");
  require(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0,
          "algo epsilon values must lie in [0, 1]");
  for (const auto* d : {&lr_decay, &clip_decay}) {
    for (const auto& m : d->milestones) {
      require(m.at >= 0.0 && m.at <= 1.0, "decay milestone 'at' must lie in [0, 1]");
      require(m.factor >= 0.0 && m.factor <= 1.0, "decay milestone factor must lie in [0, 1]");
    }
  }
}

}  // namespace modrl::algos
