#pragma once

#include <optional>
#include <string>
#include <vector>

#include "modrl/funcapprox/optim.hpp"

namespace modrl::algos {

enum class AlgoKind { kA2c, kPpo, kDdqn, kSac };

std::string to_string(AlgoKind k);
AlgoKind algo_kind_from_string(const std::string& name);
inline bool is_on_policy(AlgoKind k) { return k == AlgoKind::kA2c || k == AlgoKind::kPpo; }

enum class DecayKind { kNone, kLinearToZero, kStepFactors };

std::string to_string(DecayKind k);
DecayKind decay_kind_from_string(const std::string& name);

struct Milestone {
  double at = 0.0;      // progress fraction
  double factor = 1.0;  // multiplier applied once progress >= at
};

struct DecaySpec {
  DecayKind kind = DecayKind::kNone;
  std::vector<Milestone> milestones;
};

struct AlgoConfig {
  AlgoKind kind = AlgoKind::kPpo;
  double gamma = 0.99;
  funcapprox::AdamHyper adam;

  // on-policy
  double lr = 2.5e-4;
  DecaySpec lr_decay;
  std::size_t num_steps = 128;  // rollout horizon per env
  double clip_param = 0.15;
  DecaySpec clip_decay;
  double entropy_coef = 0.01;
  double value_loss_coef = 1.0;
  std::size_t num_epochs = 3;
  std::size_t num_mini_batch = 4;
  double max_grad_norm = 0.5;

  // off-policy (shared)
  std::size_t batch_size = 256;
  std::size_t start_steps = 10000;
  std::size_t num_updates = 32;
  std::size_t update_every = 128;  // env steps collected per cycle

  // ddqn
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_fraction = 0.1;
  std::size_t target_update_period = 100;  // in updates; ignored when target_tau is set
  std::optional<double> target_tau;
  bool huber = false;

  // sac
  double lr_q = 1e-3;
  double lr_policy = 1e-4;
  double lr_alpha = 1e-5;
  double initial_alpha = 0.2;
  std::optional<double> target_entropy;  // default -action_dim
  double polyak = 0.995;

  void validate() const;
};

}  // namespace modrl::algos
