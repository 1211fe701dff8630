#pragma once

#include <array>

#include "modrl/envs/env.hpp"

namespace modrl::envs {

// Classic cart-pole balancing: two actions push the cart with -/+ 10 N,
// explicit Euler integration at 0.02 s. Reward +1 per step, including the
// step that ends the episode.
class CartPole final : public EpisodicEnv {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForceMag = 10.0;
  static constexpr double kTau = 0.02;
  static constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
  static constexpr double kXLimit = 2.4;
  static constexpr std::size_t kMaxSteps = 500;

  // x, x_dot, theta, theta_dot
  using State = std::array<double, 4>;

  explicit CartPole(std::uint64_t seed);

  const State& state() const { return state_; }
  // Test hook: place the system in an exact state mid-episode.
  void set_state(const State& s) { state_ = s; }

 protected:
  std::vector<double> reset_state() override;
  Transition advance(std::span<const double> action) override;
  std::vector<double> observe() const override { return {state_.begin(), state_.end()}; }
  std::vector<double> state_vector() const override { return observe(); }
  void set_state_vector(const std::vector<double>& s) override;

 private:
  State state_{};
};

}  // namespace modrl::envs
