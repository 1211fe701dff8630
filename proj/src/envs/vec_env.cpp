#include "modrl/envs/vec_env.hpp"

#include "modrl/common/errors.hpp"

namespace modrl::envs {

VecEnv::VecEnv(const EnvSpec& spec, std::size_t num_envs) : spec_(spec) {
  if (num_envs == 0) throw ConfigError("a vectorized environment needs at least one copy");
  envs_.reserve(num_envs);
  for (std::size_t i = 0; i < num_envs; ++i) {
    EnvSpec copy = spec;
    copy.seed = spec.seed + i;
    envs_.push_back(env_make(copy));
  }
}

Matrix VecEnv::reset() {
  for (auto& e : envs_) e->reset();
  return observations();
}

Matrix VecEnv::observations() const {
  Matrix obs(static_cast<Eigen::Index>(envs_.size()), static_cast<Eigen::Index>(observation_dim()));
  for (std::size_t i = 0; i < envs_.size(); ++i) {
    const auto& o = envs_[i]->observation();
    for (std::size_t j = 0; j < o.size(); ++j) obs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = o[j];
  }
  return obs;
}

VecStepResult VecEnv::step(const Matrix& actions) {
  if (static_cast<std::size_t>(actions.rows()) != envs_.size()) {
    throw ConfigError("action batch has " + std::to_string(actions.rows()) + " rows for " +
                      std::to_string(envs_.size()) + " environments");
  }
  if (static_cast<std::size_t>(actions.cols()) != action_space().width()) {
    throw ConfigError("action batch width does not match the action space");
  }
  VecStepResult out;
  const auto n = envs_.size();
  out.observations.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(observation_dim()));
  out.rewards.resize(n);
  out.dones.resize(n);
  out.infos.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = envs_[i]->step(row_span(actions, static_cast<Eigen::Index>(i)));
    out.rewards[i] = r.reward;
    out.dones[i] = r.done ? 1 : 0;
    if (r.done) {
      r.info[kInfoTerminalObservation] = r.observation;
      r.observation = envs_[i]->reset();
    }
    for (std::size_t j = 0; j < r.observation.size(); ++j) {
      out.observations(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r.observation[j];
    }
    out.infos[i] = std::move(r.info);
  }
  return out;
}

void VecEnv::save_state(ByteWriter& w) const {
  w.u64(envs_.size());
  for (const auto& e : envs_) e->save_state(w);
}

void VecEnv::load_state(ByteReader& r) {
  if (r.u64() != envs_.size()) throw IntegrityError("vectorized environment size mismatch");
  for (auto& e : envs_) e->load_state(r);
}

std::unique_ptr<VecEnv> vecenv_make(const EnvSpec& spec, std::size_t num_envs) {
  return std::make_unique<VecEnv>(spec, num_envs);
}

}  // namespace modrl::envs
