#include "modrl/algos/losses.hpp"

#include <algorithm>
#include <cmath>

#include "modrl/common/errors.hpp"
#include "modrl/funcapprox/optim.hpp"

namespace modrl::algos {

namespace {

using actors::OffPolicyActor;
using actors::OnPolicyActor;
using funcapprox::Gradient;

void check_batch(const storage::MiniBatch& b) {
  const auto n = b.size();
  if (b.advantages.size() != n || b.returns.size() != n || b.behavior_log_probs.size() != n ||
      static_cast<std::size_t>(b.observations.rows()) != n || static_cast<std::size_t>(b.actions.rows()) != n) {
    throw ContractViolation("minibatch is missing advantages, returns or behavior log-probs");
  }
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Gradient tagged(const OnPolicyActor& a, std::vector<double> values) {
  Gradient g;
  g.values = std::move(values);
  g.computed_with_version = a.params().version;
  g.data_collected_with_version = a.params().version;
  return g;
}

Gradient tagged(const OffPolicyActor& a, std::vector<double> values) {
  Gradient g;
  g.values = std::move(values);
  g.computed_with_version = a.params().version;
  g.data_collected_with_version = a.params().version;
  return g;
}

// Shared PPO / A2C body. `clipped` selects the surrogate.
StepOutput on_policy(const storage::MiniBatch& batch, const OnPolicyActor& actor, const AlgoConfig& cfg,
                     bool clipped, bool want_grad) {
  check_batch(batch);
  StepOutput out;
  const std::size_t B = batch.size();
  out.stats.samples = B;
  if (B == 0) {
    out.gradient = tagged(actor, std::vector<double>(actor.params().size(), 0.0));
    return out;
  }
  const auto ev = actor.evaluate_actions(batch.observations, batch.actions);
  const double inv = 1.0 / static_cast<double>(B);
  std::vector<double> dlogp(B), dent(B, -cfg.entropy_coef * inv), dval(B);
  double pl = 0.0, vl = 0.0, clipped_count = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double A = batch.advantages[b];
    if (clipped) {
      const double ratio = std::exp(ev.log_probs[b] - batch.behavior_log_probs[b]);
      const double surr1 = ratio * A;
      const double surr2 = std::clamp(ratio, 1.0 - cfg.clip_param, 1.0 + cfg.clip_param) * A;
      pl -= std::min(surr1, surr2);
      dlogp[b] = surr1 <= surr2 ? -A * ratio * inv : 0.0;
      if (std::abs(ratio - 1.0) > cfg.clip_param) clipped_count += 1.0;
    } else {
      pl -= ev.log_probs[b] * A;
      dlogp[b] = -A * inv;
    }
    const double err = ev.values[b] - batch.returns[b];
    vl += err * err;
    dval[b] = cfg.value_loss_coef * 2.0 * err * inv;
  }
  out.stats.policy_loss = pl * inv;
  out.stats.value_loss = vl * inv;
  out.stats.entropy = mean(ev.entropies);
  out.stats.clip_fraction = clipped_count * inv;
  out.stats.total_loss =
      out.stats.policy_loss + cfg.value_loss_coef * out.stats.value_loss - cfg.entropy_coef * out.stats.entropy;
  if (want_grad) {
    auto g = tagged(actor, actor.backward(batch.observations, batch.actions, dlogp, dent, dval));
    out.gradient = std::isfinite(cfg.max_grad_norm) ? funcapprox::clip_grad_norm(g, cfg.max_grad_norm) : g;
  }
  return out;
}

}  // namespace

StepOutput ppo_step(const storage::MiniBatch& batch, const OnPolicyActor& actor, const AlgoConfig& cfg) {
  return on_policy(batch, actor, cfg, true, true);
}

LossStats ppo_loss(const storage::MiniBatch& batch, const OnPolicyActor& actor, const AlgoConfig& cfg) {
  return on_policy(batch, actor, cfg, true, false).stats;
}

StepOutput a2c_step(const storage::MiniBatch& batch, const OnPolicyActor& actor, const AlgoConfig& cfg) {
  return on_policy(batch, actor, cfg, false, true);
}

LossStats a2c_loss(const storage::MiniBatch& batch, const OnPolicyActor& actor, const AlgoConfig& cfg) {
  return on_policy(batch, actor, cfg, false, false).stats;
}

// ---------------------------------------------------------------- DDQN

std::vector<double> ddqn_targets(const storage::ReplayBatch& batch, const OffPolicyActor& actor, double gamma) {
  const Matrix next_online = actor.q_all(batch.next_obs);
  const Matrix next_target = actor.q_all_target(batch.next_obs);
  std::vector<double> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto row = static_cast<Eigen::Index>(b);
    Eigen::Index best = 0;
    next_online.row(row).maxCoeff(&best);
    const double mask = batch.dones[b] ? 0.0 : 1.0;
    y[b] = batch.rewards[b] + gamma * mask * next_target(row, best);
  }
  return y;
}

namespace {

StepOutput ddqn_impl(const storage::ReplayBatch& batch, const OffPolicyActor& actor, const AlgoConfig& cfg,
                     bool want_grad) {
  if (actor.mode() != actors::OffPolicyMode::kDdqn) throw ConfigError("ddqn requires a discrete-action Q actor");
  StepOutput out;
  const std::size_t B = batch.size();
  out.stats.samples = B;
  std::vector<double> grad(actor.params().size(), 0.0);
  if (B == 0) {
    out.gradient = tagged(actor, std::move(grad));
    return out;
  }
  const auto y = ddqn_targets(batch, actor, cfg.gamma);
  const Matrix q = actor.q_all(batch.obs);
  const double inv = 1.0 / static_cast<double>(B);
  Matrix up = Matrix::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = static_cast<Eigen::Index>(b);
    const auto a = static_cast<Eigen::Index>(std::llround(batch.actions(row, 0)));
    if (a < 0 || a >= q.cols()) throw ContractViolation("replay action outside the discrete action space");
    const double err = q(row, a) - y[b];
    if (cfg.huber && std::abs(err) > 1.0) {
      loss += std::abs(err) - 0.5;
      up(row, a) = (err > 0 ? 1.0 : -1.0) * inv;
    } else {
      loss += cfg.huber ? 0.5 * err * err : err * err;
      up(row, a) = (cfg.huber ? err : 2.0 * err) * inv;
    }
  }
  out.stats.q_loss = loss * inv;
  out.stats.total_loss = out.stats.q_loss;
  if (want_grad) {
    const auto g = actor.q_all_backward(batch.obs, up);
    const auto seg = actor.q_segment(0);
    std::copy(g.begin(), g.end(), grad.begin() + static_cast<std::ptrdiff_t>(seg.offset));
    out.gradient = tagged(actor, std::move(grad));
  }
  return out;
}

}  // namespace

StepOutput ddqn_step(const storage::ReplayBatch& batch, const OffPolicyActor& actor, const AlgoConfig& cfg) {
  return ddqn_impl(batch, actor, cfg, true);
}

LossStats ddqn_loss(const storage::ReplayBatch& batch, const OffPolicyActor& actor, const AlgoConfig& cfg) {
  return ddqn_impl(batch, actor, cfg, false).stats;
}

// ---------------------------------------------------------------- SAC

SacNoise draw_sac_noise(std::size_t batch, std::size_t action_dim, Rng& rng) {
  SacNoise n;
  n.next.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(action_dim));
  n.current.resize(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(action_dim));
  for (Eigen::Index i = 0; i < n.next.size(); ++i) n.next.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < n.current.size(); ++i) n.current.data()[i] = rng.normal();
  return n;
}

double sac_target_entropy(const AlgoConfig& cfg, std::size_t action_dim) {
  return cfg.target_entropy.value_or(-static_cast<double>(action_dim));
}

namespace {

struct SacEval {
  SacLosses losses;
  double alpha = 0.0;
  double entropy = 0.0;
  std::vector<double> grad;
};

SacEval sac_impl(const storage::ReplayBatch& batch, const OffPolicyActor& actor, const AlgoConfig& cfg,
                 const SacNoise& noise, bool want_grad) {
  if (actor.mode() != actors::OffPolicyMode::kSac) throw ConfigError("sac requires a continuous-action SAC actor");
  SacEval ev;
  const std::size_t B = batch.size();
  ev.alpha = std::exp(actor.log_alpha());
  if (want_grad) ev.grad.assign(actor.params().size(), 0.0);
  if (B == 0) return ev;
  const double inv = 1.0 / static_cast<double>(B);
  const double alpha = ev.alpha;

  // Critic.
  const auto next = actor.sample_squashed(batch.next_obs, noise.next);
  const auto [tq1, tq2] = actor.target_q_values(batch.next_obs, next.actions);
  std::vector<double> y(B);
  for (std::size_t b = 0; b < B; ++b) {
    const double mask = batch.dones[b] ? 0.0 : 1.0;
    y[b] = batch.rewards[b] + cfg.gamma * mask * (std::min(tq1[b], tq2[b]) - alpha * next.log_probs[b]);
  }
  const auto [oq1, oq2] = actor.q_values(batch.obs, batch.actions);
  for (int which = 0; which < 2; ++which) {
    std::vector<double> up(B, 0.0);
    const auto& q = which == 0 ? oq1 : oq2;
    for (std::size_t b = 0; b < B; ++b) {
      const double err = q[b] - y[b];
      ev.losses.critic += err * err * inv;
      up[b] = 2.0 * err * inv;
    }
    if (want_grad) {
      const auto cb = actor.q_backward(which, batch.obs, batch.actions, up);
      const auto seg = actor.q_segment(which);
      std::copy(cb.param_grad.begin(), cb.param_grad.end(), ev.grad.begin() + static_cast<std::ptrdiff_t>(seg.offset));
    }
  }

  // Policy and temperature.
  const auto cur = actor.sample_squashed(batch.obs, noise.current);
  const auto [q1, q2] = actor.q_values(batch.obs, cur.actions);
  const double target_entropy = sac_target_entropy(cfg, actor.action_dim());
  double alpha_grad = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    ev.losses.policy += (alpha * cur.log_probs[b] - std::min(q1[b], q2[b])) * inv;
    ev.losses.alpha += -actor.log_alpha() * (cur.log_probs[b] + target_entropy) * inv;
    alpha_grad += -(cur.log_probs[b] + target_entropy) * inv;
    ev.entropy -= cur.log_probs[b] * inv;
  }
  if (want_grad) {
    std::vector<double> up1(B, 0.0), up2(B, 0.0);
    for (std::size_t b = 0; b < B; ++b) (q1[b] <= q2[b] ? up1 : up2)[b] = 1.0;
    const auto c1 = actor.q_backward(0, batch.obs, cur.actions, up1);
    const auto c2 = actor.q_backward(1, batch.obs, cur.actions, up2);
    const Matrix daction = -(c1.action_grad + c2.action_grad) * inv;
    const std::vector<double> dlogp(B, alpha * inv);
    const auto pg = actor.squashed_backward(batch.obs, noise.current, dlogp, daction);
    const auto seg = actor.policy_segment();
    std::copy(pg.begin(), pg.end(), ev.grad.begin() + static_cast<std::ptrdiff_t>(seg.offset));
    ev.grad[actor.log_alpha_segment().offset] = alpha_grad;
  }
  return ev;
}

}  // namespace

StepOutput sac_step(const storage::ReplayBatch& batch, const OffPolicyActor& actor, const AlgoConfig& cfg,
                    const SacNoise& noise) {
  auto ev = sac_impl(batch, actor, cfg, noise, true);
  StepOutput out;
  out.gradient = tagged(actor, std::move(ev.grad));
  out.stats.samples = batch.size();
  out.stats.q_loss = ev.losses.critic;
  out.stats.policy_loss = ev.losses.policy;
  out.stats.alpha_loss = ev.losses.alpha;
  out.stats.alpha = ev.alpha;
  out.stats.entropy = ev.entropy;
  out.stats.total_loss = ev.losses.critic + ev.losses.policy + ev.losses.alpha;
  return out;
}

SacLosses sac_losses(const storage::ReplayBatch& batch, const OffPolicyActor& actor, const AlgoConfig& cfg,
                     const SacNoise& noise) {
  return sac_impl(batch, actor, cfg, noise, false).losses;
}

}  // namespace modrl::algos
