#pragma once

#include "modrl/envs/env.hpp"

namespace modrl::envs {

// size x size grid, goal in the bottom-right corner, start cell drawn
// uniformly from the other cells. Actions: 0 up, 1 down, 2 left, 3 right
// (moves into walls leave the agent in place). Each step costs 0.01;
// entering the goal pays +1 and ends the episode. One-hot observation.
class GridWorld final : public EpisodicEnv {
 public:
  static constexpr double kStepPenalty = -0.01;
  static constexpr double kGoalReward = 1.0;
  static constexpr std::size_t kMaxSteps = 100;

  GridWorld(std::uint64_t seed, std::size_t size);

  std::size_t size() const { return size_; }
  std::size_t agent_cell() const { return row_ * size_ + col_; }
  std::size_t goal_cell() const { return size_ * size_ - 1; }
  void set_agent(std::size_t row, std::size_t col) {
    row_ = row;
    col_ = col;
  }

 protected:
  std::vector<double> reset_state() override;
  Transition advance(std::span<const double> action) override;
  std::vector<double> observe() const override;
  std::vector<double> state_vector() const override;
  void set_state_vector(const std::vector<double>& s) override;

 private:
  std::size_t size_;
  std::size_t row_ = 0;
  std::size_t col_ = 0;
};

}  // namespace modrl::envs
