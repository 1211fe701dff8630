#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modrl/common/rng.hpp"
#include "modrl/common/types.hpp"
#include "modrl/envs/env.hpp"
#include "modrl/funcapprox/mlp.hpp"

namespace modrl::actors {

enum class DistKind { kCategorical, kDiagGaussian };

struct OnPolicyActorConfig {
  std::size_t obs_dim = 1;
  envs::ActionSpace action_space = envs::ActionSpace::discrete(2);
  std::vector<std::size_t> hidden = {64, 64};
  funcapprox::Activation activation = funcapprox::Activation::kTanh;
  double initial_log_std = 0.0;

  DistKind dist_kind() const {
    return action_space.is_discrete() ? DistKind::kCategorical : DistKind::kDiagGaussian;
  }
};

// Batched output of act(); row b of `actions` is the action for obs row b.
struct ActionBatch {
  Matrix actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> entropies;
};

struct Evaluation {
  std::vector<double> log_probs;
  std::vector<double> entropies;
  std::vector<double> values;
};

// Separate policy and value MLPs over one flat parameter vector laid out
// as [policy | value | log_std (gaussian only)]. Gaussian policies use a
// state-independent learnable log_std.
class OnPolicyActor {
 public:
  OnPolicyActor(OnPolicyActorConfig config, funcapprox::ParamVector params);

  static std::size_t param_count(const OnPolicyActorConfig& config);

  const OnPolicyActorConfig& config() const { return config_; }
  DistKind dist_kind() const { return config_.dist_kind(); }
  const funcapprox::MlpSpec& policy_spec() const { return policy_spec_; }
  const funcapprox::MlpSpec& value_spec() const { return value_spec_; }
  funcapprox::Segment policy_segment() const { return policy_seg_; }
  funcapprox::Segment value_segment() const { return value_seg_; }
  funcapprox::Segment log_std_segment() const { return log_std_seg_; }

  const funcapprox::ParamVector& params() const { return params_; }
  // Whole-vector replacement; the only way parameters change.
  void set_params(funcapprox::ParamVector params);

  ActionBatch act(const Matrix& obs, bool deterministic, Rng& rng) const;
  std::vector<double> values(const Matrix& obs) const;
  Evaluation evaluate_actions(const Matrix& obs, const Matrix& actions) const;

  // Gradient with respect to all parameters of
  //   sum_b dlogp[b] * logp_b + dentropy[b] * H_b + dvalue[b] * V_b
  // evaluated at the current parameters.
  std::vector<double> backward(const Matrix& obs, const Matrix& actions, std::span<const double> dlogp,
                               std::span<const double> dentropy, std::span<const double> dvalue) const;

 private:
  void check_obs(const Matrix& obs) const;
  std::span<const double> log_std() const { return log_std_seg_.of(std::span<const double>(params_.values)); }

  OnPolicyActorConfig config_;
  funcapprox::MlpSpec policy_spec_;
  funcapprox::MlpSpec value_spec_;
  funcapprox::Segment policy_seg_, value_seg_, log_std_seg_;
  funcapprox::ParamVector params_;
};

// Pure constructor: every call returns an actor with bit-identical initial
// parameters (orthogonal init seeded from `seed`).
class OnPolicyActorFactory {
 public:
  OnPolicyActorFactory(OnPolicyActorConfig config, std::uint64_t seed);

  OnPolicyActor operator()() const;
  const OnPolicyActorConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }

 private:
  OnPolicyActorConfig config_;
  std::uint64_t seed_;
};

OnPolicyActorFactory create_factory(const OnPolicyActorConfig& config, std::uint64_t seed);

}  // namespace modrl::actors
