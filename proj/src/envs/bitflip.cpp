#include "modrl/envs/bitflip.hpp"

#include "modrl/common/errors.hpp"

namespace modrl::envs {

BitFlip::BitFlip(std::uint64_t seed, std::size_t n)
    : EpisodicEnv(seed, 2 * n, ActionSpace::discrete(n), n), n_(n), state_(n, 0.0), goal_(n, 0.0) {}

double BitFlip::reward(std::span<const double> achieved, std::span<const double> desired) {
  if (achieved.size() != desired.size()) throw ConfigError("goal length mismatch");
  for (std::size_t i = 0; i < achieved.size(); ++i) {
    if (achieved[i] != desired[i]) return -1.0;
  }
  return 0.0;
}

std::optional<GoalSpace> BitFlip::goal_space() const {
  GoalSpace g;
  g.goal_offset = n_;
  g.goal_dim = n_;
  g.success_reward = 0.0;
  g.reward = &BitFlip::reward;
  return g;
}

std::vector<double> BitFlip::reset_state() {
  do {
    for (auto& b : state_) b = rng_.uniform() < 0.5 ? 0.0 : 1.0;
    for (auto& b : goal_) b = rng_.uniform() < 0.5 ? 0.0 : 1.0;
  } while (state_ == goal_);
  return observe();
}

EpisodicEnv::Transition BitFlip::advance(std::span<const double> action) {
  auto& bit = state_[static_cast<std::size_t>(action[0])];
  bit = 1.0 - bit;
  Transition t;
  t.reward = reward(state_, goal_);
  t.terminated = t.reward == 0.0;
  t.info[kInfoAchievedGoal] = state_;
  t.info[kInfoSuccess] = {t.terminated ? 1.0 : 0.0};
  return t;
}

std::vector<double> BitFlip::observe() const {
  std::vector<double> obs(state_);
  obs.insert(obs.end(), goal_.begin(), goal_.end());
  return obs;
}

void BitFlip::set_state_vector(const std::vector<double>& s) {
  if (s.size() != 2 * n_) throw IntegrityError("bitflip state must have 2n entries");
  state_.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n_));
  goal_.assign(s.begin() + static_cast<std::ptrdiff_t>(n_), s.end());
}

}  // namespace modrl::envs
