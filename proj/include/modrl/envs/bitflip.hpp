#pragma once

#include "modrl/envs/env.hpp"

namespace modrl::envs {

// n-bit flipping with a sparse goal reward: action i flips bit i; reward 0
// when the state equals the goal (episode ends), -1 otherwise. Episodes
// last at most n steps. Observation is state (n) followed by goal (n).
class BitFlip final : public EpisodicEnv {
 public:
  BitFlip(std::uint64_t seed, std::size_t n);

  std::size_t bits() const { return n_; }
  const std::vector<double>& state() const { return state_; }
  const std::vector<double>& goal() const { return goal_; }
  void set_state(std::vector<double> state, std::vector<double> goal) {
    state_ = std::move(state);
    goal_ = std::move(goal);
  }

  static double reward(std::span<const double> achieved, std::span<const double> desired);

  std::optional<GoalSpace> goal_space() const override;

 protected:
  std::vector<double> reset_state() override;
  Transition advance(std::span<const double> action) override;
  std::vector<double> observe() const override;
  std::vector<double> state_vector() const override { return observe(); }
  void set_state_vector(const std::vector<double>& s) override;

 private:
  std::size_t n_;
  std::vector<double> state_;
  std::vector<double> goal_;
};

}  // namespace modrl::envs
