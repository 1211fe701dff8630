#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "modrl/common/rng.hpp"
#include "modrl/common/types.hpp"
#include "modrl/envs/env.hpp"
#include "modrl/funcapprox/mlp.hpp"

namespace modrl::actors {

enum class OffPolicyMode { kDdqn, kSac };

struct OffPolicyActorConfig {
  OffPolicyMode mode = OffPolicyMode::kSac;
  std::size_t obs_dim = 1;
  envs::ActionSpace action_space = envs::ActionSpace::continuous({-1.0}, {1.0});
  std::vector<std::size_t> hidden = {256, 256};
  funcapprox::Activation activation = funcapprox::Activation::kRelu;
  double initial_alpha = 0.2;  // SAC only
};

struct SquashedSample {
  Matrix actions;  // in (-1, 1)^d
  std::vector<double> log_probs;
  Matrix noise;  // the standard-normal draw used (zeros when deterministic)
};

struct CriticBackward {
  std::vector<double> q;
  std::vector<double> param_grad;  // gradient for the selected critic only
  Matrix action_grad;              // d/d(action) of sum_b upstream_b * Q(s_b, a_b)
};

// SAC layout:  [policy | q1 | q2 | q1_target | q2_target | log_alpha]
// DDQN layout: [q | q_target]
// Policy head outputs [mean (d) | log_std (d)]; log_std clamped to [-20, 2].
class OffPolicyActor {
 public:
  OffPolicyActor(OffPolicyActorConfig config, funcapprox::ParamVector params);

  static std::size_t param_count(const OffPolicyActorConfig& config);

  const OffPolicyActorConfig& config() const { return config_; }
  OffPolicyMode mode() const { return config_.mode; }
  std::size_t action_dim() const { return config_.action_space.width(); }
  const funcapprox::MlpSpec& policy_spec() const { return policy_spec_; }
  const funcapprox::MlpSpec& q_spec() const { return q_spec_; }

  funcapprox::Segment policy_segment() const { return policy_seg_; }
  // which = 0 or 1 (DDQN has only 0).
  funcapprox::Segment q_segment(int which) const;
  funcapprox::Segment q_target_segment(int which) const;
  funcapprox::Segment log_alpha_segment() const { return alpha_seg_; }

  const funcapprox::ParamVector& params() const { return params_; }
  void set_params(funcapprox::ParamVector params);

  double log_alpha() const;

  // --- SAC ---
  SquashedSample sample_squashed(const Matrix& obs, bool deterministic, Rng& rng) const;
  // Reparameterized sample u = mean + std * noise, action = tanh(u).
  SquashedSample sample_squashed(const Matrix& obs, const Matrix& noise) const;
  // Gradient w.r.t. the policy block (length policy_segment().size) of
  //   sum_b dlogp[b] * logp_b + <daction_b, action_b>
  // with the noise held fixed.
  std::vector<double> squashed_backward(const Matrix& obs, const Matrix& noise, std::span<const double> dlogp,
                                        const Matrix& daction) const;
  std::pair<std::vector<double>, std::vector<double>> q_values(const Matrix& obs, const Matrix& actions) const;
  std::pair<std::vector<double>, std::vector<double>> target_q_values(const Matrix& obs, const Matrix& actions) const;
  CriticBackward q_backward(int which, const Matrix& obs, const Matrix& actions,
                            std::span<const double> upstream) const;

  // --- DDQN ---
  Matrix q_all(const Matrix& obs) const;
  Matrix q_all_target(const Matrix& obs) const;
  // Gradient w.r.t. the online Q block of sum_{b,k} upstream(b,k) * Q(s_b)_k.
  std::vector<double> q_all_backward(const Matrix& obs, const Matrix& upstream) const;
  std::vector<std::size_t> greedy_actions(const Matrix& obs) const;

 private:
  void require_mode(OffPolicyMode m, const char* what) const;
  void check_obs(const Matrix& obs) const;
  Matrix critic_input(const Matrix& obs, const Matrix& actions) const;
  std::span<const double> block(funcapprox::Segment s) const { return s.of(std::span<const double>(params_.values)); }

  OffPolicyActorConfig config_;
  funcapprox::MlpSpec policy_spec_;
  funcapprox::MlpSpec q_spec_;
  funcapprox::Segment policy_seg_, q_seg_[2], q_target_seg_[2], alpha_seg_;
  funcapprox::ParamVector params_;
};

class OffPolicyActorFactory {
 public:
  OffPolicyActorFactory(OffPolicyActorConfig config, std::uint64_t seed);

  OffPolicyActor operator()() const;
  const OffPolicyActorConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

 private:
  OffPolicyActorConfig config_;
  std::uint64_t seed_;
};

OffPolicyActorFactory create_factory(const OffPolicyActorConfig& config, std::uint64_t seed);

// Maps a squashed action in [-1, 1]^d onto the box [low, high].
std::vector<double> scale_action(std::span<const double> squashed, const envs::ActionSpace& space);

}  // namespace modrl::actors
