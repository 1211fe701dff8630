#include "modrl/envs/gridworld.hpp"

#include "modrl/common/errors.hpp"

namespace modrl::envs {

GridWorld::GridWorld(std::uint64_t seed, std::size_t size)
    : EpisodicEnv(seed, size * size, ActionSpace::discrete(4), kMaxSteps), size_(size) {}

std::vector<double> GridWorld::reset_state() {
  const auto cell = rng_.index(size_ * size_ - 1);
  row_ = cell / size_;
  col_ = cell % size_;
  return observe();
}

EpisodicEnv::Transition GridWorld::advance(std::span<const double> action) {
  switch (static_cast<int>(action[0])) {
    case 0: if (row_ > 0) --row_; break;
    case 1: if (row_ + 1 < size_) ++row_; break;
    case 2: if (col_ > 0) --col_; break;
    default: if (col_ + 1 < size_) ++col_; break;
  }
  Transition t;
  const bool at_goal = agent_cell() == goal_cell();
  t.reward = at_goal ? kGoalReward : kStepPenalty;
  t.terminated = at_goal;
  t.info[kInfoSuccess] = {at_goal ? 1.0 : 0.0};
  return t;
}

std::vector<double> GridWorld::observe() const {
  std::vector<double> obs(size_ * size_, 0.0);
  obs[agent_cell()] = 1.0;
  return obs;
}

std::vector<double> GridWorld::state_vector() const {
  return {static_cast<double>(row_), static_cast<double>(col_)};
}

void GridWorld::set_state_vector(const std::vector<double>& s) {
  if (s.size() != 2) throw IntegrityError("gridworld state must have 2 entries");
  row_ = static_cast<std::size_t>(s[0]);
  col_ = static_cast<std::size_t>(s[1]);
}

}  // namespace modrl::envs
