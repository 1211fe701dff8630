#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "modrl/algos/losses.hpp"
#include "modrl/algos/schedule.hpp"
#include "modrl/algos/updater.hpp"
#include "modrl/common/errors.hpp"
#include "support/oracles.hpp"

using namespace modrl;
using namespace modrl::algos;
using namespace modrl::actors;
using funcapprox::ParamVector;
using modrl::testing::max_rel_err;
using modrl::testing::numeric_gradient;
using modrl::testing::random_matrix;
using modrl::testing::random_vector;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

OnPolicyActorConfig onp_cfg(bool discrete) {
  OnPolicyActorConfig c;
  c.obs_dim = 3;
  c.action_space = discrete ? envs::ActionSpace::discrete(3) : envs::ActionSpace::continuous({-1, -1}, {1, 1});
  c.hidden = {6};
  return c;
}

OnPolicyActor perturbed(const OnPolicyActorConfig& c, Rng& rng) {
  auto p = create_factory(c, rng.next_u64())().params();
  for (auto& v : p.values) v += 0.2 * rng.normal();
  return OnPolicyActor(c, p);
}

storage::MiniBatch make_batch(const OnPolicyActor& a, std::size_t n, Rng& rng, double lp_jitter) {
  storage::MiniBatch b;
  b.observations = random_matrix(rng, static_cast<Eigen::Index>(n), 3);
  b.actions = a.act(b.observations, false, rng).actions;
  const auto e = a.evaluate_actions(b.observations, b.actions);
  for (std::size_t i = 0; i < n; ++i) {
    b.indices.push_back(i);
    b.behavior_log_probs.push_back(e.log_probs[i] + lp_jitter * rng.normal());
    b.value_estimates.push_back(e.values[i]);
  }
  b.returns = random_vector(rng, n);
  b.advantages = random_vector(rng, n);
  return b;
}

AlgoConfig ppo_cfg() {
  AlgoConfig c;
  c.kind = AlgoKind::kPpo;
  c.clip_param = 0.15;
  c.entropy_coef = 0.01;
  c.value_loss_coef = 1.0;
  c.max_grad_norm = kInf;
  return c;
}

OffPolicyActorConfig sac_actor_cfg() {
  OffPolicyActorConfig c;
  c.obs_dim = 3;
  c.action_space = envs::ActionSpace::continuous({-1, -1}, {1, 1});
  c.hidden = {5};
  return c;
}

OffPolicyActorConfig ddqn_actor_cfg() {
  OffPolicyActorConfig c;
  c.mode = OffPolicyMode::kDdqn;
  c.obs_dim = 3;
  c.action_space = envs::ActionSpace::discrete(3);
  c.hidden = {5};
  return c;
}

storage::ReplayBatch replay_batch(std::size_t n, std::size_t action_width, bool discrete, Rng& rng,
                                  double done_prob = 0.3) {
  storage::ReplayBatch b;
  b.obs = random_matrix(rng, static_cast<Eigen::Index>(n), 3);
  b.next_obs = random_matrix(rng, static_cast<Eigen::Index>(n), 3);
  b.actions.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(action_width));
  for (Eigen::Index i = 0; i < b.actions.size(); ++i) {
    b.actions.data()[i] = discrete ? static_cast<double>(rng.index(3)) : rng.uniform(-0.9, 0.9);
  }
  b.rewards = random_vector(rng, n);
  for (std::size_t i = 0; i < n; ++i) b.dones.push_back(rng.uniform() < done_prob ? 1 : 0);
  return b;
}

std::vector<double> slice(const std::vector<double>& v, funcapprox::Segment s) {
  return {v.begin() + static_cast<std::ptrdiff_t>(s.offset), v.begin() + static_cast<std::ptrdiff_t>(s.offset + s.size)};
}

template <typename Loss>
std::vector<double> block_fd(const OffPolicyActor& a, funcapprox::Segment seg, Loss&& loss) {
  return numeric_gradient(
      [&](const std::vector<double>& v) {
        auto p = a.params();
        std::copy(v.begin(), v.end(), p.values.begin() + static_cast<std::ptrdiff_t>(seg.offset));
        return loss(OffPolicyActor(a.config(), p));
      },
      slice(a.params().values, seg), 1e-5);
}

}  // namespace

TEST(Ppo, UnitRatioStandardizedAdvantagesGiveZeroPolicyLoss) {
  Rng rng(1);
  const auto a = perturbed(onp_cfg(true), rng);
  auto b = make_batch(a, 32, rng, 0.0);
  storage::normalize_advantages(b.advantages);
  const auto s = ppo_loss(b, a, ppo_cfg());
  EXPECT_NEAR(s.policy_loss, 0.0, 1e-10);
  EXPECT_EQ(s.clip_fraction, 0.0);
}

TEST(Ppo, ZeroAdvantagesLeaveOnlyValueAndEntropy) {
  Rng rng(2);
  const auto a = perturbed(onp_cfg(true), rng);
  auto b = make_batch(a, 16, rng, 0.3);
  std::fill(b.advantages.begin(), b.advantages.end(), 0.0);
  auto cfg = ppo_cfg();
  const auto s = ppo_step(b, a, cfg);
  EXPECT_EQ(s.stats.policy_loss, 0.0);
  EXPECT_NEAR(s.stats.total_loss, cfg.value_loss_coef * s.stats.value_loss - cfg.entropy_coef * s.stats.entropy, 1e-14);
  std::vector<double> dv(16), zero(16, 0.0), dh(16, -cfg.entropy_coef / 16.0);
  const auto e = a.evaluate_actions(b.observations, b.actions);
  for (std::size_t i = 0; i < 16; ++i) dv[i] = cfg.value_loss_coef * 2.0 * (e.values[i] - b.returns[i]) / 16.0;
  EXPECT_LE(max_rel_err(s.gradient.values, a.backward(b.observations, b.actions, zero, dh, dv)), 1e-10);
}

TEST(Ppo, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = onp_cfg(trial % 2 == 0);
    const auto a = perturbed(c, rng);
    const auto b = make_batch(a, 8, rng, 0.3);
    const auto cfg = ppo_cfg();
    const auto s = ppo_step(b, a, cfg);
    const auto fd = numeric_gradient(
        [&](const std::vector<double>& v) { return ppo_loss(b, OnPolicyActor(c, ParamVector{v}), cfg).total_loss; },
        a.params().values);
    EXPECT_LE(max_rel_err(s.gradient.values, fd), 1e-5) << "trial " << trial;
    EXPECT_GE(s.stats.clip_fraction, 0.0);
    EXPECT_LE(s.stats.clip_fraction, 1.0);
  }
}

TEST(Ppo, ClipFractionCountsOutOfRangeRatios) {
  Rng rng(4);
  const auto a = perturbed(onp_cfg(true), rng);
  auto b = make_batch(a, 4, rng, 0.0);
  const auto e = a.evaluate_actions(b.observations, b.actions);
  const std::vector<double> shift{0.0, 0.5, -0.5, 0.1};
  for (std::size_t i = 0; i < 4; ++i) b.behavior_log_probs[i] = e.log_probs[i] + shift[i];
  EXPECT_DOUBLE_EQ(ppo_loss(b, a, ppo_cfg()).clip_fraction, 0.5);
}

TEST(Ppo, GradientIsClippedToMaxNorm) {
  Rng rng(5);
  const auto a = perturbed(onp_cfg(true), rng);
  const auto b = make_batch(a, 8, rng, 0.3);
  auto cfg = ppo_cfg();
  cfg.max_grad_norm = 1e-3;
  EXPECT_NEAR(funcapprox::l2_norm(ppo_step(b, a, cfg).gradient.values), 1e-3, 1e-12);
}

TEST(A2c, EqualsPpoAtUnitRatio) {
  Rng rng(6);
  const auto a = perturbed(onp_cfg(false), rng);
  const auto b = make_batch(a, 12, rng, 0.0);
  auto cfg = ppo_cfg();
  cfg.clip_param = 1e6;
  const auto p = ppo_step(b, a, cfg);
  cfg.kind = AlgoKind::kA2c;
  const auto q = a2c_step(b, a, cfg);
  EXPECT_LE(max_rel_err(p.gradient.values, q.gradient.values), 1e-10);
}

TEST(A2c, ZeroAdvantagesZeroPolicyGradient) {
  Rng rng(7);
  const auto a = perturbed(onp_cfg(true), rng);
  auto b = make_batch(a, 10, rng, 0.0);
  std::fill(b.advantages.begin(), b.advantages.end(), 0.0);
  auto cfg = ppo_cfg();
  cfg.kind = AlgoKind::kA2c;
  cfg.entropy_coef = 0.0;
  cfg.value_loss_coef = 0.0;
  for (double g : a2c_step(b, a, cfg).gradient.values) EXPECT_EQ(g, 0.0);
}

TEST(A2c, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  auto cfg = ppo_cfg();
  cfg.kind = AlgoKind::kA2c;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = onp_cfg(trial % 2 == 1);
    const auto a = perturbed(c, rng);
    const auto b = make_batch(a, 8, rng, 0.3);
    const auto fd = numeric_gradient(
        [&](const std::vector<double>& v) { return a2c_loss(b, OnPolicyActor(c, ParamVector{v}), cfg).total_loss; },
        a.params().values);
    EXPECT_LE(max_rel_err(a2c_step(b, a, cfg).gradient.values, fd), 1e-5) << "trial " << trial;
  }
}

TEST(Ddqn, TerminalTargetsAreRewards) {
  Rng rng(9);
  const auto a = create_factory(ddqn_actor_cfg(), 1)();
  const auto b = replay_batch(10, 1, true, rng, 1.0);
  EXPECT_EQ(ddqn_targets(b, a, 0.99), b.rewards);
}

// With target equal to online the double-Q target is the ordinary max-Q
// target. Two next states, computed by hand from q_all.
TEST(Ddqn, MatchesQLearningTargetWhenTargetEqualsOnline) {
  Rng rng(10);
  const auto a = create_factory(ddqn_actor_cfg(), 2)();
  auto b = replay_batch(2, 1, true, rng, 0.0);
  b.next_obs.row(1) = b.obs.row(0);
  const auto q_next = a.q_all(b.next_obs);
  const auto y = ddqn_targets(b, a, 0.9);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(y[static_cast<std::size_t>(i)], b.rewards[static_cast<std::size_t>(i)] + 0.9 * q_next.row(i).maxCoeff(), 1e-14);
}

TEST(Ddqn, GradientMatchesFiniteDifferencesAndIgnoresTargets) {
  Rng rng(11);
  AlgoConfig cfg;
  cfg.kind = AlgoKind::kDdqn;
  cfg.max_grad_norm = kInf;
  for (int trial = 0; trial < 50; ++trial) {
    auto a = create_factory(ddqn_actor_cfg(), rng.next_u64())();
    // Fresh output layers put the per-action values within the difference
    // step of each other; spreading them keeps the argmax fixed under FD.
    auto p = a.params();
    for (auto& v : p.values) v += 0.3 * rng.normal();
    a.set_params(p);
    const auto b = replay_batch(6, 1, true, rng);
    const auto s = ddqn_step(b, a, cfg);
    const auto fd = block_fd(a, a.q_segment(0), [&](const OffPolicyActor& x) { return ddqn_loss(b, x, cfg).q_loss; });
    EXPECT_LE(max_rel_err(slice(s.gradient.values, a.q_segment(0)), fd), 1e-5) << "trial " << trial;
    for (double g : slice(s.gradient.values, a.q_target_segment(0))) EXPECT_EQ(g, 0.0);
  }
  const auto sac = create_factory(sac_actor_cfg(), 0)();
  EXPECT_THROW(ddqn_step(replay_batch(2, 2, false, rng), sac, cfg), ConfigError);
}

TEST(Sac, GradientsMatchFiniteDifferencesWithFrozenNoise) {
  Rng rng(12);
  AlgoConfig cfg;
  cfg.kind = AlgoKind::kSac;
  cfg.gamma = 0.98;
  cfg.max_grad_norm = kInf;
  for (int trial = 0; trial < 50; ++trial) {
    auto a = create_factory(sac_actor_cfg(), rng.next_u64())();
    auto p = a.params();
    for (auto& v : p.values) v += 0.05 * rng.normal();
    a.set_params(p);
    const auto b = replay_batch(4, 2, false, rng);
    const auto noise = draw_sac_noise(4, 2, rng);
    const auto s = sac_step(b, a, cfg, noise);
    const auto critic = [&](const OffPolicyActor& x) { return sac_losses(b, x, cfg, noise).critic; };
    const auto policy = [&](const OffPolicyActor& x) { return sac_losses(b, x, cfg, noise).policy; };
    const auto alpha = [&](const OffPolicyActor& x) { return sac_losses(b, x, cfg, noise).alpha; };
    for (int w = 0; w < 2; ++w) {
      EXPECT_LE(max_rel_err(slice(s.gradient.values, a.q_segment(w)), block_fd(a, a.q_segment(w), critic)), 1e-5);
      for (double g : slice(s.gradient.values, a.q_target_segment(w))) EXPECT_EQ(g, 0.0);
    }
    EXPECT_LE(max_rel_err(slice(s.gradient.values, a.policy_segment()), block_fd(a, a.policy_segment(), policy)), 1e-5);
    EXPECT_LE(max_rel_err(slice(s.gradient.values, a.log_alpha_segment()), block_fd(a, a.log_alpha_segment(), alpha)),
              1e-5);
  }
}

TEST(Sac, AlphaGradientVanishesAtTargetEntropy) {
  Rng rng(13);
  const auto a = create_factory(sac_actor_cfg(), 3)();
  const auto b = replay_batch(8, 2, false, rng);
  const auto noise = draw_sac_noise(8, 2, rng);
  const auto lp = a.sample_squashed(b.obs, noise.current).log_probs;
  double mean_lp = 0;
  for (double v : lp) mean_lp += v / 8.0;
  AlgoConfig cfg;
  cfg.kind = AlgoKind::kSac;
  cfg.max_grad_norm = kInf;
  cfg.target_entropy = -mean_lp;
  EXPECT_NEAR(sac_step(b, a, cfg, noise).gradient.values[a.log_alpha_segment().offset], 0.0, 1e-12);
}

TEST(Sac, TerminalOnlyBatchIgnoresTargets) {
  Rng rng(14);
  auto a = create_factory(sac_actor_cfg(), 4)();
  const auto b = replay_batch(5, 2, false, rng, 1.0);
  const auto noise = draw_sac_noise(5, 2, rng);
  AlgoConfig cfg;
  cfg.kind = AlgoKind::kSac;
  const double before = sac_losses(b, a, cfg, noise).critic;
  auto p = a.params();
  for (int w = 0; w < 2; ++w) {
    const auto tg = a.q_target_segment(w);
    for (std::size_t i = 0; i < tg.size; ++i) p.values[tg.offset + i] += rng.normal();
  }
  a.set_params(p);
  EXPECT_EQ(sac_losses(b, a, cfg, noise).critic, before);
  const auto [q1, q2] = a.q_values(b.obs, b.actions);
  double want = 0;
  for (std::size_t i = 0; i < 5; ++i) want += (std::pow(q1[i] - b.rewards[i], 2) + std::pow(q2[i] - b.rewards[i], 2)) / 5.0;
  EXPECT_NEAR(before, want, 1e-12);
}

TEST(Sac, ZeroAlphaDeterministicPolicyLoss) {
  Rng rng(15);
  auto a = create_factory(sac_actor_cfg(), 5)();
  auto p = a.params();
  p.values[a.log_alpha_segment().offset] = -1000.0;
  a.set_params(p);
  const auto b = replay_batch(1, 2, false, rng);
  SacNoise noise{Matrix::Zero(1, 2), Matrix::Zero(1, 2)};
  AlgoConfig cfg;
  cfg.kind = AlgoKind::kSac;
  const auto act = a.sample_squashed(b.obs, true, rng).actions;
  const auto [q1, q2] = a.q_values(b.obs, act);
  EXPECT_NEAR(sac_losses(b, a, cfg, noise).policy, -std::min(q1[0], q2[0]), 1e-12);
}

TEST(Schedule, Examples) {
  EXPECT_EQ(decay_schedule(2.5e-4, 0.0, DecayKind::kLinearToZero), 2.5e-4);
  EXPECT_EQ(decay_schedule(2.5e-4, 1.0, DecayKind::kLinearToZero), 0.0);
  const std::vector<Milestone> m{{0.2, 0.25}, {0.8, 0.25}};
  EXPECT_DOUBLE_EQ(decay_schedule(1.0, 0.5, DecayKind::kStepFactors, m), 0.25);
  EXPECT_DOUBLE_EQ(decay_schedule(1.0, 0.9, DecayKind::kStepFactors, m), 0.0625);
  EXPECT_EQ(decay_schedule(1.0, 0.7, DecayKind::kNone), 1.0);
  EXPECT_THROW(decay_schedule(1.0, 1.5, DecayKind::kLinearToZero), ConfigError);
  EXPECT_THROW(decay_schedule(1.0, -0.1, DecayKind::kNone), ConfigError);
}

TEST(Schedule, MonotoneNonIncreasing) {
  const std::vector<Milestone> m{{0.2, 0.25}, {0.8, 0.25}};
  for (auto kind : {DecayKind::kLinearToZero, DecayKind::kStepFactors, DecayKind::kNone}) {
    double prev = kInf;
    for (int i = 0; i <= 1000; ++i) {
      const double v = decay_schedule(3.0, i / 1000.0, kind, m);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(Schedule, EpsilonAnneal) {
  EXPECT_DOUBLE_EQ(epsilon_schedule(1.0, 0.05, 0.1, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_schedule(1.0, 0.05, 0.1, 0.05), 0.525);
  EXPECT_DOUBLE_EQ(epsilon_schedule(1.0, 0.05, 0.1, 0.5), 0.05);
}

TEST(Updater, DdqnPeriodicTargetSync) {
  auto a = create_factory(ddqn_actor_cfg(), 6)();
  AlgoConfig cfg;
  cfg.kind = AlgoKind::kDdqn;
  cfg.lr = 1e-2;
  cfg.target_update_period = 3;
  Updater u(cfg, layout_for(a), a.params().size());
  Rng rng(16);
  auto p = a.params();
  const auto on = a.q_segment(0), tg = a.q_target_segment(0);
  for (int k = 1; k <= 6; ++k) {
    funcapprox::Gradient g{std::vector<double>(p.size(), 0.0)};
    for (std::size_t i = 0; i < on.size; ++i) g.values[on.offset + i] = rng.normal();
    const auto old_target = slice(p.values, tg);
    p = u.apply(p, g, 0.0);
    EXPECT_EQ(p.version, static_cast<std::uint64_t>(k));
    if (k % 3 == 0) {
      EXPECT_EQ(slice(p.values, tg), slice(p.values, on));
    } else {
      EXPECT_EQ(slice(p.values, tg), old_target);
    }
  }
}

TEST(Updater, SacPolyakAndGroupRates) {
  auto a = create_factory(sac_actor_cfg(), 7)();
  AlgoConfig cfg;
  cfg.kind = AlgoKind::kSac;
  Updater u(cfg, layout_for(a), a.params().size());
  const auto p0 = a.params();
  funcapprox::Gradient g{std::vector<double>(p0.size(), 1.0)};
  const auto p1 = u.apply(p0, g, 0.0);
  const auto pol = a.policy_segment(), q0 = a.q_segment(0), tg0 = a.q_target_segment(0);
  EXPECT_NEAR(p1.values[pol.offset] - p0.values[pol.offset], -cfg.lr_policy, cfg.lr_policy * 1e-7);
  EXPECT_NEAR(p1.values[q0.offset] - p0.values[q0.offset], -cfg.lr_q, cfg.lr_q * 1e-7);
  EXPECT_NEAR(p1.values[a.log_alpha_segment().offset] - p0.values[a.log_alpha_segment().offset], -cfg.lr_alpha, cfg.lr_alpha * 1e-7);
  for (std::size_t i = 0; i < tg0.size; i += 5) {
    EXPECT_NEAR(p1.values[tg0.offset + i], 0.995 * p0.values[tg0.offset + i] + 0.005 * p1.values[q0.offset + i], 1e-15);
  }
}

TEST(Updater, StateRoundTripReproducesSteps) {
  auto a = create_factory(onp_cfg(true), 8)();
  AlgoConfig cfg = ppo_cfg();
  cfg.lr_decay.kind = DecayKind::kLinearToZero;
  Updater u(cfg, layout_for(a), a.params().size());
  Rng rng(17);
  auto p = a.params();
  p = u.apply(p, funcapprox::Gradient{random_vector(rng, p.size())}, 0.1);
  ByteWriter w;
  u.save_state(w);
  const auto bytes = w.take();
  Updater v(cfg, layout_for(a), a.params().size());
  ByteReader r(bytes);
  v.load_state(r);
  const funcapprox::Gradient g{random_vector(rng, p.size())};
  EXPECT_EQ(u.apply(p, g, 0.2).values, v.apply(p, g, 0.2).values);
  EXPECT_DOUBLE_EQ(u.learning_rate(LrKind::kMain, 0.5), cfg.lr * 0.5);
}

TEST(AlgoConfig, Validation) {
  AlgoConfig c;
  c.gamma = 1.2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AlgoConfig{};
  c.clip_param = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = AlgoConfig{};
  c.entropy_coef = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
