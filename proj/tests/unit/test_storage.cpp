#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "modrl/common/errors.hpp"
#include "modrl/envs/bitflip.hpp"
#include "modrl/storage/config.hpp"
#include "modrl/storage/replay.hpp"
#include "modrl/storage/rollout.hpp"
#include "support/oracles.hpp"

using namespace modrl;
using namespace modrl::storage;
using modrl::testing::random_matrix;
using modrl::testing::random_vector;

namespace {

Rollout random_rollout(Rng& rng, std::size_t T, std::size_t E, double done_prob = 0.2) {
  Rollout r;
  r.num_steps = T;
  r.num_envs = E;
  const auto n = static_cast<Eigen::Index>(T * E);
  r.observations = random_matrix(rng, n, 3);
  r.actions = random_matrix(rng, n, 1);
  r.rewards = random_vector(rng, T * E);
  r.value_estimates = random_vector(rng, T * E);
  r.behavior_log_probs = random_vector(rng, T * E, 0.3);
  r.bootstrap_values = random_vector(rng, E);
  r.dones.resize(T * E);
  for (auto& d : r.dones) d = rng.uniform() < done_prob ? 1 : 0;
  return r;
}

Rollout single_env(std::vector<double> rewards, std::vector<double> values, std::vector<std::uint8_t> dones,
                   double bootstrap) {
  Rollout r;
  r.num_steps = rewards.size();
  r.num_envs = 1;
  r.observations = Matrix::Zero(static_cast<Eigen::Index>(rewards.size()), 1);
  r.actions = Matrix::Zero(static_cast<Eigen::Index>(rewards.size()), 1);
  r.behavior_log_probs.assign(rewards.size(), 0.0);
  r.rewards = std::move(rewards);
  r.value_estimates = std::move(values);
  r.dones = std::move(dones);
  r.bootstrap_values = {bootstrap};
  return r;
}

// Sum of discounted rewards until the episode ends or the rollout runs out,
// in which case the bootstrap value is added.
double brute_return(const Rollout& r, std::size_t t0, std::size_t e, double g) {
  double total = 0, disc = 1;
  for (std::size_t t = t0; t < r.num_steps; ++t) {
    const auto i = t * r.num_envs + e;
    total += disc * r.rewards[i];
    if (r.dones[i]) return total;
    disc *= g;
  }
  return total + disc * r.bootstrap_values[e];
}

double value_at(const Rollout& r, std::size_t t, std::size_t e) {
  return t < r.num_steps ? r.value_estimates[t * r.num_envs + e] : r.bootstrap_values[e];
}

double delta_at(const Rollout& r, std::size_t t, std::size_t e, double g) {
  const auto i = t * r.num_envs + e;
  return r.rewards[i] + g * (r.dones[i] ? 0.0 : value_at(r, t + 1, e)) - r.value_estimates[i];
}

// Sum over l of (g*lambda)^l delta_{t+l}, cut at the first done.
double brute_gae(const Rollout& r, std::size_t t0, std::size_t e, double g, double lam) {
  double total = 0, w = 1;
  for (std::size_t t = t0; t < r.num_steps; ++t) {
    total += w * delta_at(r, t, e, g);
    if (r.dones[t * r.num_envs + e]) break;
    w *= g * lam;
  }
  return total;
}

// Double loop over (s, t) of gamma^{t-s} prod_{s<=i<t} c_i rho_t delta_t.
double brute_vtrace(const Rollout& r, const std::vector<double>& tlp, std::size_t s, std::size_t e, double g,
                    double rho_bar, double c_bar) {
  double total = r.value_estimates[s * r.num_envs + e];
  for (std::size_t t = s; t < r.num_steps; ++t) {
    double coef = std::pow(g, static_cast<double>(t - s));
    bool cut = false;
    for (std::size_t i = s; i < t; ++i) {
      const auto k = i * r.num_envs + e;
      if (r.dones[k]) cut = true;
      coef *= std::min(c_bar, std::exp(tlp[k] - r.behavior_log_probs[k]));
    }
    if (cut) break;
    const auto k = t * r.num_envs + e;
    const double rho = std::min(rho_bar, std::exp(tlp[k] - r.behavior_log_probs[k]));
    total += coef * rho * delta_at(r, t, e, g);
  }
  return total;
}

ReplayEntry entry(double tag) {
  ReplayEntry e;
  e.obs = {tag};
  e.action = {0.0};
  e.reward = tag;
  e.next_obs = {tag + 1};
  return e;
}

}  // namespace

TEST(Vanilla, GammaZeroIsReward) {
  Rng rng(1);
  const auto r = compute_returns_vanilla(random_rollout(rng, 6, 3), 0.0);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r.returns[i], r.rewards[i]);
}

TEST(Vanilla, SingleTerminalTransition) {
  const auto r = compute_returns_vanilla(single_env({1.0}, {0.4}, {1}, 9.0), 0.99);
  EXPECT_DOUBLE_EQ(r.returns[0], 1.0);
  EXPECT_DOUBLE_EQ(r.advantages[0], 0.6);
}

TEST(Vanilla, MatchesBruteForce) {
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const auto in = random_rollout(rng, 5, 2);
    const auto r = compute_returns_vanilla(in, 0.9);
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t e = 0; e < 2; ++e) {
        EXPECT_NEAR(r.returns[t * 2 + e], brute_return(in, t, e, 0.9), 1e-12);
        EXPECT_NEAR(r.advantages[t * 2 + e], r.returns[t * 2 + e] - in.value_estimates[t * 2 + e], 1e-12);
      }
    }
  }
  EXPECT_THROW(compute_returns_vanilla(random_rollout(rng, 2, 1), 1.5), ConfigError);
}

TEST(Gae, LambdaZeroIsTdResidual) {
  Rng rng(3);
  const auto in = random_rollout(rng, 7, 2);
  const auto r = compute_gae(in, 0.97, 0.0);
  for (std::size_t t = 0; t < 7; ++t) {
    for (std::size_t e = 0; e < 2; ++e) EXPECT_NEAR(r.advantages[t * 2 + e], delta_at(in, t, e, 0.97), 1e-14);
  }
}

TEST(Gae, MatchesDoubleSum) {
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const auto in = random_rollout(rng, 6, 3);
    const auto r = compute_gae(in, 0.99, 0.95);
    for (std::size_t t = 0; t < 6; ++t) {
      for (std::size_t e = 0; e < 3; ++e) {
        const auto i = t * 3 + e;
        EXPECT_NEAR(r.advantages[i], brute_gae(in, t, e, 0.99, 0.95), 1e-12);
        EXPECT_NEAR(r.returns[i], r.advantages[i] + in.value_estimates[i], 1e-12);
      }
    }
  }
  EXPECT_THROW(compute_gae(random_rollout(rng, 2, 1), 0.9, -0.1), ConfigError);
}

TEST(Gae, LambdaOneZeroValuesIsMonteCarlo) {
  Rng rng(5);
  auto in = random_rollout(rng, 8, 2);
  std::fill(in.value_estimates.begin(), in.value_estimates.end(), 0.0);
  std::fill(in.bootstrap_values.begin(), in.bootstrap_values.end(), 0.0);
  const auto g = compute_gae(in, 0.9, 1.0);
  const auto v = compute_returns_vanilla(in, 0.9);
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_NEAR(g.advantages[i], v.returns[i], 1e-12);
}

TEST(Gae, LambdaOneEqualsVanillaMinusValues) {
  Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const auto in = random_rollout(rng, 1 + rng.index(12), 1 + rng.index(4));
    const double gamma = rng.uniform();
    const auto g = compute_gae(in, gamma, 1.0);
    const auto v = compute_returns_vanilla(in, gamma);
    for (std::size_t i = 0; i < in.size(); ++i) {
      EXPECT_NEAR(g.advantages[i], v.returns[i] - in.value_estimates[i], 1e-10);
    }
  }
}

TEST(Vtrace, UnitRatiosGiveBootstrappedReturn) {
  Rng rng(7);
  const auto in = random_rollout(rng, 6, 2);
  const auto r = compute_vtrace(in, in.behavior_log_probs, 0.95, 1.0, 1.0);
  const auto g = compute_gae(in, 0.95, 1.0);
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_NEAR(r.returns[i], g.returns[i], 1e-12);
}

TEST(Vtrace, UnitRatiosEqualGaeLambdaOneProperty) {
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const auto in = random_rollout(rng, 1 + rng.index(10), 1 + rng.index(3));
    const double gamma = rng.uniform();
    const double bar = 1.0 + rng.uniform() * 3.0;
    const auto r = compute_vtrace(in, in.behavior_log_probs, gamma, bar, bar);
    const auto g = compute_gae(in, gamma, 1.0);
    for (std::size_t i = 0; i < in.size(); ++i) EXPECT_NEAR(r.returns[i], g.returns[i], 1e-10);
  }
}

TEST(Vtrace, TinyTruncationIsPureBootstrap) {
  Rng rng(9);
  const auto in = random_rollout(rng, 5, 2);
  const auto r = compute_vtrace(in, in.behavior_log_probs, 0.9, 1e-12, 1e-12);
  for (std::size_t i = 0; i < in.size(); ++i) EXPECT_NEAR(r.returns[i], in.value_estimates[i], 1e-10);
  EXPECT_THROW(compute_vtrace(in, in.behavior_log_probs, 0.9, 0.0, 1.0), ConfigError);
}

TEST(Vtrace, MatchesDirectSummation) {
  Rng rng(10);
  for (int k = 0; k < 50; ++k) {
    const auto in = random_rollout(rng, 5, 2);
    std::vector<double> tlp(in.size());
    for (std::size_t i = 0; i < tlp.size(); ++i) tlp[i] = in.behavior_log_probs[i] + (i % 2 ? -0.5 : 0.5);
    const double rho_bar = k % 2 ? 1.0 : 1.3, c_bar = 1.0;
    const auto r = compute_vtrace(in, tlp, 0.9, rho_bar, c_bar);
    for (std::size_t s = 0; s < 5; ++s) {
      for (std::size_t e = 0; e < 2; ++e) {
        const auto i = s * 2 + e;
        EXPECT_NEAR(r.returns[i], brute_vtrace(in, tlp, s, e, 0.9, rho_bar, c_bar), 1e-12);
        const double next_v = in.dones[i] ? 0.0 : (s + 1 < 5 ? brute_vtrace(in, tlp, s + 1, e, 0.9, rho_bar, c_bar)
                                                              : in.bootstrap_values[e]);
        const double rho = std::min(rho_bar, std::exp(tlp[i] - in.behavior_log_probs[i]));
        EXPECT_NEAR(r.advantages[i], rho * (in.rewards[i] + 0.9 * next_v - in.value_estimates[i]), 1e-12);
      }
    }
  }
}

// Perturbing anything after a done flag leaves earlier advantages untouched.
TEST(Boundaries, PerturbationAfterDoneIsInvisible) {
  Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    auto a = random_rollout(rng, 8, 1, 0.0);
    const std::size_t cut = 1 + rng.index(6);
    a.dones[cut] = 1;
    auto b = a;
    for (std::size_t t = cut + 1; t < 8; ++t) {
      b.rewards[t] += rng.normal();
      b.value_estimates[t] += rng.normal();
      b.behavior_log_probs[t] += rng.normal();
    }
    b.bootstrap_values[0] += 5.0;
    const auto check = [&](const Rollout& x, const Rollout& y) {
      for (std::size_t t = 0; t <= cut; ++t) {
        EXPECT_NEAR(x.advantages[t], y.advantages[t], 1e-14);
        EXPECT_NEAR(x.returns[t], y.returns[t], 1e-14);
      }
    };
    check(compute_returns_vanilla(a, 0.9), compute_returns_vanilla(b, 0.9));
    check(compute_gae(a, 0.9, 0.8), compute_gae(b, 0.9, 0.8));
    check(compute_vtrace(a, a.behavior_log_probs, 0.9), compute_vtrace(b, a.behavior_log_probs, 0.9));
  }
}

TEST(Minibatch, SingleBatchIsWholeRolloutStandardized) {
  Rng rng(12);
  const auto r = compute_gae(random_rollout(rng, 16, 2), 0.99, 0.95);
  const auto b = minibatch_epochs(r, 1, 1, 3);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].size(), 32u);
  double mean = 0, sq = 0;
  for (double a : b[0].advantages) mean += a;
  mean /= 32;
  for (double a : b[0].advantages) sq += (a - mean) * (a - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(sq / 32), 1.0, 1e-6);
}

TEST(Minibatch, EpochsCoverEverySampleOnce) {
  Rng rng(13);
  const auto r = compute_gae(random_rollout(rng, 128, 8), 0.99, 0.95);
  const auto batches = minibatch_epochs(r, 3, 4, 7);
  ASSERT_EQ(batches.size(), 12u);
  for (std::size_t ep = 0; ep < 3; ++ep) {
    std::multiset<std::size_t> seen;
    for (std::size_t b = 0; b < 4; ++b) {
      const auto& mb = batches[ep * 4 + b];
      EXPECT_EQ(mb.epoch, ep);
      EXPECT_EQ(mb.size(), 256u);
      seen.insert(mb.indices.begin(), mb.indices.end());
      for (std::size_t k = 0; k < mb.size(); ++k) {
        EXPECT_EQ(mb.returns[k], r.returns[mb.indices[k]]);
        EXPECT_EQ(mb.observations.row(static_cast<Eigen::Index>(k)),
                  r.observations.row(static_cast<Eigen::Index>(mb.indices[k])));
      }
    }
    EXPECT_EQ(seen.size(), 1024u);
    EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 1024u);
  }
  const auto again = minibatch_epochs(r, 3, 4, 7);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(again[i].indices, batches[i].indices);
}

TEST(Minibatch, UnevenSplitKeepsEverything) {
  Rng rng(14);
  const auto r = compute_gae(random_rollout(rng, 10, 1), 0.99, 0.95);
  const auto b = minibatch_epochs(r, 1, 4, 1);
  ASSERT_EQ(b.size(), 4u);
  EXPECT_EQ(b[0].size(), 3u);
  EXPECT_EQ(b[1].size(), 3u);
  EXPECT_EQ(b[2].size(), 2u);
  EXPECT_EQ(b[3].size(), 2u);
  EXPECT_THROW(minibatch_epochs(random_rollout(rng, 2, 1), 1, 1, 0), ContractViolation);
}

TEST(Replay, FifoEviction) {
  ReplayBuffer buf(3, 0);
  for (int i = 0; i < 4; ++i) buf.insert(entry(i));
  EXPECT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).reward, 1.0);
  EXPECT_EQ(buf.at(2).reward, 3.0);
}

TEST(Replay, NotReadyBelowBatchSize) {
  ReplayBuffer buf(10, 0);
  buf.insert(entry(0));
  EXPECT_FALSE(buf.sample(2).has_value());
  buf.insert(entry(1));
  EXPECT_TRUE(buf.sample(2).has_value());
}

TEST(Replay, UniformSampling) {
  ReplayBuffer buf(10, 42);
  for (int i = 0; i < 10; ++i) buf.insert(entry(i));
  std::array<int, 10> counts{};
  const int n = 100000;
  for (int k = 0; k < n / 10; ++k) {
    const auto idx = buf.sample_indices(10);
    ASSERT_TRUE(idx.has_value());
    for (auto i : *idx) ++counts[i];
  }
  const double sigma = std::sqrt(n * 0.1 * 0.9);
  for (int c : counts) EXPECT_LE(std::abs(c - n * 0.1), 3 * sigma);
}

TEST(Replay, SeededDeterminismAndStateRoundTrip) {
  ReplayBuffer a(50, 9), b(50, 9);
  for (int i = 0; i < 30; ++i) {
    a.insert(entry(i));
    b.insert(entry(i));
  }
  EXPECT_EQ(*a.sample_indices(16), *b.sample_indices(16));
  ByteWriter w;
  a.save_state(w);
  const auto bytes = w.take();
  ReplayBuffer c(50, 0);
  ByteReader r(bytes);
  c.load_state(r);
  EXPECT_EQ(*a.sample_indices(16), *c.sample_indices(16));
  const auto batch = *a.sample(4);
  EXPECT_EQ(batch.obs.rows(), 4);
  EXPECT_EQ(batch.size(), 4u);
}

namespace {

std::vector<ReplayEntry> bitflip_episode(std::uint64_t seed, std::size_t n, std::size_t len, Rng& rng) {
  envs::BitFlip env(seed, n);
  env.reset();
  std::vector<ReplayEntry> ep;
  for (std::size_t t = 0; t < len; ++t) {
    ReplayEntry e;
    e.obs = env.observation();
    e.action = {static_cast<double>(rng.index(n))};
    const auto r = env.step(e.action);
    e.reward = r.reward;
    e.next_obs = r.observation;
    e.done = r.done && !r.truncated();
    e.goal = env.goal();
    e.achieved_goal = r.info.at(envs::kInfoAchievedGoal);
    ep.push_back(e);
    if (r.done) break;
  }
  return ep;
}

}  // namespace

TEST(Her, KZeroIsIdentity) {
  Rng rng(1);
  const auto ep = bitflip_episode(3, 6, 4, rng);
  const auto gs = envs::BitFlip(0, 6).goal_space().value();
  EXPECT_EQ(her_relabel(ep, 0, HerStrategy::kFuture, gs, rng), ep);
}

TEST(Her, FinalStrategyLastTransitionSucceeds) {
  Rng rng(2);
  const auto ep = bitflip_episode(5, 8, 4, rng);
  const auto gs = envs::BitFlip(0, 8).goal_space().value();
  const auto out = her_relabel(ep, 1, HerStrategy::kFinal, gs, rng);
  const auto& last = out.back();
  EXPECT_EQ(last.goal, ep.back().achieved_goal);
  EXPECT_EQ(last.reward, gs.success_reward);
  EXPECT_TRUE(last.done);
}

TEST(Her, FutureRewardsRecomputed) {
  Rng rng(3);
  const auto gs = envs::BitFlip(0, 6).goal_space().value();
  for (int trial = 0; trial < 50; ++trial) {
    const auto ep = bitflip_episode(100 + static_cast<std::uint64_t>(trial), 6, 4, rng);
    const auto snapshot = ep;
    const auto out = her_relabel(ep, 1, HerStrategy::kFuture, gs, rng);
    EXPECT_EQ(ep, snapshot);
    ASSERT_EQ(out.size(), ep.size() * 2);
    for (std::size_t t = 0; t < ep.size(); ++t) {
      EXPECT_EQ(out[2 * t], ep[t]);
      const auto& c = out[2 * t + 1];
      EXPECT_EQ(c.reward, envs::BitFlip::reward(c.achieved_goal, c.goal));
      bool from_future = false;
      for (std::size_t s = t; s < ep.size(); ++s) from_future = from_future || ep[s].achieved_goal == c.goal;
      EXPECT_TRUE(from_future);
      EXPECT_TRUE(std::equal(c.goal.begin(), c.goal.end(), c.obs.begin() + 6));
      EXPECT_TRUE(std::equal(c.goal.begin(), c.goal.end(), c.next_obs.begin() + 6));
    }
  }
}

TEST(Her, CountAndErrors) {
  Rng rng(4);
  const auto ep = bitflip_episode(9, 10, 5, rng);
  const auto gs = envs::BitFlip(0, 10).goal_space().value();
  EXPECT_EQ(her_relabel(ep, 4, HerStrategy::kFuture, gs, rng).size(), ep.size() * 5);
  auto bare = ep;
  bare[0].goal.clear();
  EXPECT_THROW(her_relabel(bare, 1, HerStrategy::kFuture, gs, rng), ConfigError);
}

TEST(StorageConfig, Validation) {
  StorageConfig c;
  c.gae_lambda = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = StorageConfig{};
  c.capacity = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(storage_kind_from_string(to_string(StorageKind::kVtrace)), StorageKind::kVtrace);
}
