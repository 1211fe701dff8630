#include "modrl/envs/env.hpp"

#include <cmath>

#include "modrl/common/errors.hpp"
#include "modrl/envs/bitflip.hpp"
#include "modrl/envs/cartpole.hpp"
#include "modrl/envs/gridworld.hpp"
#include "modrl/envs/pendulum.hpp"

namespace modrl::envs {

std::string to_string(EnvName name) {
  switch (name) {
    case EnvName::kCartPole: return "cartpole";
    case EnvName::kPendulum: return "pendulum";
    case EnvName::kGridWorld: return "gridworld";
    case EnvName::kBitFlip: return "bitflip";
  }
  return "unknown";
}

EnvName env_name_from_string(const std::string& name) {
  if (name == "cartpole") return EnvName::kCartPole;
  if (name == "pendulum") return EnvName::kPendulum;
  if (name == "gridworld") return EnvName::kGridWorld;
  if (name == "bitflip") return EnvName::kBitFlip;
  throw ConfigError("unknown environment '" + name + "' (expected cartpole, pendulum, gridworld or bitflip)");
}

double EnvSpec::param(const std::string& key, double fallback) const {
  const auto it = extra.find(key);
  return it == extra.end() ? fallback : it->second;
}

ActionSpace ActionSpace::discrete(std::size_t n) {
  if (n < 2) throw ConfigError("discrete action space needs at least 2 actions");
  ActionSpace s;
  s.kind = Kind::kDiscrete;
  s.n = n;
  return s;
}

ActionSpace ActionSpace::continuous(std::vector<double> low, std::vector<double> high) {
  if (low.empty() || low.size() != high.size()) throw ConfigError("continuous bounds must be non-empty and equal length");
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (!(low[i] < high[i])) throw ConfigError("continuous bounds require low < high");
  }
  ActionSpace s;
  s.kind = Kind::kContinuous;
  s.n = 0;
  s.low = std::move(low);
  s.high = std::move(high);
  return s;
}

bool ActionSpace::contains(std::span<const double> action) const {
  if (action.size() != width()) return false;
  if (is_discrete()) {
    const double a = action[0];
    return std::isfinite(a) && a >= 0.0 && a < static_cast<double>(n) && a == std::floor(a);
  }
  for (std::size_t i = 0; i < action.size(); ++i) {
    if (!(action[i] >= low[i] && action[i] <= high[i])) return false;
  }
  return true;
}

EpisodicEnv::EpisodicEnv(std::uint64_t seed, std::size_t obs_dim, ActionSpace space, std::size_t max_steps)
    : rng_(seed), obs_dim_(obs_dim), space_(std::move(space)), max_steps_(max_steps) {}

std::vector<double> EpisodicEnv::reset() {
  steps_ = 0;
  done_ = false;
  obs_ = reset_state();
  return obs_;
}

StepResult EpisodicEnv::step(std::span<const double> action) {
  if (done_) throw ContractViolation("step() called on a finished episode; call reset() first");
  if (!space_.contains(action)) throw ContractViolation("action outside the environment's action space");
  auto t = advance(action);
  ++steps_;
  StepResult r;
  r.observation = observe();
  r.reward = t.reward;
  r.done = t.terminated;
  r.info = std::move(t.info);
  if (!r.done && steps_ >= max_steps_) {
    r.done = true;
    r.info[kInfoTruncated] = {1.0};
  }
  for (double x : r.observation) {
    if (!std::isfinite(x)) throw NumericFault("environment produced a non-finite observation");
  }
  if (!std::isfinite(r.reward)) throw NumericFault("environment produced a non-finite reward");
  done_ = r.done;
  obs_ = r.observation;
  return r;
}

void EpisodicEnv::save_state(ByteWriter& w) const {
  w.str(rng_.serialize());
  w.u64(steps_);
  w.u8(done_ ? 1 : 0);
  w.f64s(state_vector());
  w.f64s(obs_);
}

void EpisodicEnv::load_state(ByteReader& r) {
  rng_.deserialize(r.str());
  steps_ = r.u64();
  done_ = r.u8() != 0;
  set_state_vector(r.f64s());
  obs_ = r.f64s();
}

std::unique_ptr<Env> env_make(const EnvSpec& spec) {
  std::unique_ptr<Env> env;
  switch (spec.name) {
    case EnvName::kCartPole: env = std::make_unique<CartPole>(spec.seed); break;
    case EnvName::kPendulum: env = std::make_unique<Pendulum>(spec.seed); break;
    case EnvName::kGridWorld: {
      const double size = spec.param("size", 5.0);
      if (size < 2.0 || size != std::floor(size)) throw ConfigError("gridworld size must be an integer >= 2");
      env = std::make_unique<GridWorld>(spec.seed, static_cast<std::size_t>(size));
      break;
    }
    case EnvName::kBitFlip: {
      const double n = spec.param("n", 15.0);
      if (n < 2.0 || n != std::floor(n)) throw ConfigError("bitflip length n must be an integer >= 2");
      env = std::make_unique<BitFlip>(spec.seed, static_cast<std::size_t>(n));
      break;
    }
  }
  env->reset();
  return env;
}

}  // namespace modrl::envs
