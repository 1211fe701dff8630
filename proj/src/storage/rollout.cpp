#include "modrl/storage/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "modrl/common/errors.hpp"
#include "modrl/common/rng.hpp"

namespace modrl::storage {

void Rollout::validate() const {
  const auto n = size();
  auto check = [&](std::size_t got, const char* name) {
    if (got != n) {
      throw ConfigError(std::string("rollout field ") + name + " has length " + std::to_string(got) + ", expected " +
                        std::to_string(n));
    }
  };
  check(static_cast<std::size_t>(observations.rows()), "observations");
  check(static_cast<std::size_t>(actions.rows()), "actions");
  check(rewards.size(), "rewards");
  check(dones.size(), "dones");
  check(value_estimates.size(), "value_estimates");
  check(behavior_log_probs.size(), "behavior_log_probs");
  if (bootstrap_values.size() != num_envs) throw ConfigError("rollout bootstrap_values must have one entry per env");
}

namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

Rollout compute_returns_vanilla(Rollout r, double gamma) {
  check_unit(gamma, "gamma");
  r.validate();
  const auto T = r.num_steps, E = r.num_envs;
  r.returns.assign(r.size(), 0.0);
  r.advantages.assign(r.size(), 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    double next = r.bootstrap_values[e];
    for (std::size_t t = T; t-- > 0;) {
      const auto i = t * E + e;
      next = r.rewards[i] + gamma * (r.dones[i] ? 0.0 : 1.0) * next;
      r.returns[i] = next;
      r.advantages[i] = next - r.value_estimates[i];
    }
  }
  return r;
}

Rollout compute_gae(Rollout r, double gamma, double lambda) {
  check_unit(gamma, "gamma");
  check_unit(lambda, "gae lambda");
  r.validate();
  const auto T = r.num_steps, E = r.num_envs;
  r.returns.assign(r.size(), 0.0);
  r.advantages.assign(r.size(), 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    double next_value = r.bootstrap_values[e];
    double next_adv = 0.0;
    for (std::size_t t = T; t-- > 0;) {
      const auto i = t * E + e;
      const double mask = r.dones[i] ? 0.0 : 1.0;
      const double delta = r.rewards[i] + gamma * mask * next_value - r.value_estimates[i];
      next_adv = delta + gamma * lambda * mask * next_adv;
      r.advantages[i] = next_adv;
      r.returns[i] = next_adv + r.value_estimates[i];
      next_value = r.value_estimates[i];
    }
  }
  return r;
}

Rollout compute_vtrace(Rollout r, std::span<const double> target_log_probs, double gamma, double rho_bar,
                       double c_bar) {
  check_unit(gamma, "gamma");
  if (!(rho_bar > 0.0) || !(c_bar > 0.0)) throw ConfigError("v-trace rho_bar and c_bar must be positive");
  r.validate();
  if (target_log_probs.size() != r.size()) throw ConfigError("target_log_probs length must match the rollout");
  const auto T = r.num_steps, E = r.num_envs;
  r.returns.assign(r.size(), 0.0);
  r.advantages.assign(r.size(), 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    double next_v = r.bootstrap_values[e];      // v_{s+1}
    double next_value = r.bootstrap_values[e];  // V_{s+1}
    for (std::size_t t = T; t-- > 0;) {
      const auto i = t * E + e;
      const double mask = r.dones[i] ? 0.0 : 1.0;
      const double ratio = std::exp(target_log_probs[i] - r.behavior_log_probs[i]);
      const double rho = std::min(rho_bar, ratio);
      const double c = std::min(c_bar, ratio);
      const double V = r.value_estimates[i];
      const double delta = r.rewards[i] + gamma * mask * next_value - V;
      const double v = V + rho * delta + gamma * mask * c * (next_v - next_value);
      r.advantages[i] = rho * (r.rewards[i] + gamma * mask * next_v - V);
      r.returns[i] = v;
      next_v = v;
      next_value = V;
    }
  }
  return r;
}

void normalize_advantages(std::vector<double>& adv, double eps) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = (a - mean) / (sd + eps);
}

std::vector<MiniBatch> minibatch_epochs(std::span<const Rollout> rollouts, std::size_t num_epochs,
                                        std::size_t num_mini_batch, std::uint64_t seed) {
  if (num_mini_batch == 0) throw ConfigError("num_mini_batch must be >= 1");
  struct Ref {
    const Rollout* r;
    std::size_t i;
  };
  std::vector<Ref> refs;
  std::size_t obs_dim = 0, act_dim = 0;
  for (const auto& r : rollouts) {
    if (!r.processed()) throw ContractViolation("rollout has no advantages; run a compute pass first");
    if (r.size() == 0) continue;
    obs_dim = static_cast<std::size_t>(r.observations.cols());
    act_dim = static_cast<std::size_t>(r.actions.cols());
    for (std::size_t i = 0; i < r.size(); ++i) refs.push_back({&r, i});
  }
  const std::size_t n = refs.size();
  std::vector<MiniBatch> out;
  out.reserve(num_epochs * num_mini_batch);
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  for (std::size_t ep = 0; ep < num_epochs; ++ep) {
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
    const std::size_t base = n / num_mini_batch, extra = n % num_mini_batch;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < num_mini_batch; ++b) {
      const std::size_t m = base + (b < extra ? 1 : 0);
      MiniBatch mb;
      mb.epoch = ep;
      mb.index = b;
      mb.indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                        perm.begin() + static_cast<std::ptrdiff_t>(pos + m));
      pos += m;
      mb.observations.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(obs_dim));
      mb.actions.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(act_dim));
      for (std::size_t k = 0; k < m; ++k) {
        const auto& ref = refs[mb.indices[k]];
        const auto row = static_cast<Eigen::Index>(ref.i);
        mb.observations.row(static_cast<Eigen::Index>(k)) = ref.r->observations.row(row);
        mb.actions.row(static_cast<Eigen::Index>(k)) = ref.r->actions.row(row);
        mb.returns.push_back(ref.r->returns[ref.i]);
        mb.advantages.push_back(ref.r->advantages[ref.i]);
        mb.behavior_log_probs.push_back(ref.r->behavior_log_probs[ref.i]);
        mb.value_estimates.push_back(ref.r->value_estimates[ref.i]);
      }
      normalize_advantages(mb.advantages);
      out.push_back(std::move(mb));
    }
  }
  return out;
}

std::vector<MiniBatch> minibatch_epochs(const Rollout& rollout, std::size_t num_epochs, std::size_t num_mini_batch,
                                        std::uint64_t seed) {
  return minibatch_epochs(std::span<const Rollout>(&rollout, 1), num_epochs, num_mini_batch, seed);
}

void write_rollout(ByteWriter& w, const Rollout& r) {
  w.u64(r.num_steps);
  w.u64(r.num_envs);
  w.matrix(r.observations);
  w.matrix(r.actions);
  w.f64s(r.rewards);
  w.bytes(r.dones);
  w.f64s(r.value_estimates);
  w.f64s(r.behavior_log_probs);
  w.f64s(r.bootstrap_values);
  w.u64(r.collected_with_version);
  w.f64s(r.returns);
  w.f64s(r.advantages);
}

Rollout read_rollout(ByteReader& in) {
  Rollout r;
  r.num_steps = in.u64();
  r.num_envs = in.u64();
  r.observations = in.matrix();
  r.actions = in.matrix();
  r.rewards = in.f64s();
  r.dones = in.bytes();
  r.value_estimates = in.f64s();
  r.behavior_log_probs = in.f64s();
  r.bootstrap_values = in.f64s();
  r.collected_with_version = in.u64();
  r.returns = in.f64s();
  r.advantages = in.f64s();
  return r;
}

}  // namespace modrl::storage
