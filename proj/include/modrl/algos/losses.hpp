#pragma once

#include "modrl/actors/off_policy_actor.hpp"
#include "modrl/actors/on_policy_actor.hpp"
#include "modrl/algos/config.hpp"
#include "modrl/common/rng.hpp"
#include "modrl/funcapprox/mlp.hpp"
#include "modrl/storage/replay.hpp"
#include "modrl/storage/rollout.hpp"

namespace modrl::algos {

struct LossStats {
  double total_loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double q_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  std::size_t samples = 0;
};

struct StepOutput {
  funcapprox::Gradient gradient;  // over the actor's whole flat parameter vector
  LossStats stats;
};

// Clipped surrogate + value MSE - entropy bonus. The gradient is clipped to
// cfg.max_grad_norm; an empty batch yields a zero gradient.
StepOutput ppo_step(const storage::MiniBatch& batch, const actors::OnPolicyActor& actor, const AlgoConfig& cfg);
LossStats ppo_loss(const storage::MiniBatch& batch, const actors::OnPolicyActor& actor, const AlgoConfig& cfg);

StepOutput a2c_step(const storage::MiniBatch& batch, const actors::OnPolicyActor& actor, const AlgoConfig& cfg);
LossStats a2c_loss(const storage::MiniBatch& batch, const actors::OnPolicyActor& actor, const AlgoConfig& cfg);

// Double-Q regression onto y = r + gamma (1 - done) Q_target(s', argmax_a Q(s', a)).
StepOutput ddqn_step(const storage::ReplayBatch& batch, const actors::OffPolicyActor& actor, const AlgoConfig& cfg);
LossStats ddqn_loss(const storage::ReplayBatch& batch, const actors::OffPolicyActor& actor, const AlgoConfig& cfg);
std::vector<double> ddqn_targets(const storage::ReplayBatch& batch, const actors::OffPolicyActor& actor,
                                 double gamma);

// Standard-normal draws for the reparameterized samples: `next` for the
// critic target at s', `current` for the policy and alpha losses at s.
struct SacNoise {
  Matrix next;
  Matrix current;
};

SacNoise draw_sac_noise(std::size_t batch, std::size_t action_dim, Rng& rng);
double sac_target_entropy(const AlgoConfig& cfg, std::size_t action_dim);

struct SacLosses {
  double critic = 0.0;
  double policy = 0.0;
  double alpha = 0.0;
};

// One flat gradient carrying the critic gradient in the q1/q2 blocks, the
// policy gradient in the policy block and the temperature gradient in the
// log_alpha slot. Target blocks are zero.
StepOutput sac_step(const storage::ReplayBatch& batch, const actors::OffPolicyActor& actor, const AlgoConfig& cfg,
                    const SacNoise& noise);
SacLosses sac_losses(const storage::ReplayBatch& batch, const actors::OffPolicyActor& actor, const AlgoConfig& cfg,
                     const SacNoise& noise);

}  // namespace modrl::algos
