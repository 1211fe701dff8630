#pragma once

#include "modrl/envs/env.hpp"

namespace modrl::envs {

// Torque-limited pendulum swing-up. Observation (cos th, sin th, th_dot),
// action torque in [-2, 2], reward -(th^2 + 0.1 th_dot^2 + 0.001 u^2) with
// th wrapped to [-pi, pi). Never terminates; capped at 200 steps.
class Pendulum final : public EpisodicEnv {
 public:
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;
  static constexpr double kDt = 0.05;
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr std::size_t kMaxSteps = 200;

  explicit Pendulum(std::uint64_t seed);

  double theta() const { return theta_; }
  double theta_dot() const { return theta_dot_; }
  void set_state(double theta, double theta_dot) {
    theta_ = theta;
    theta_dot_ = theta_dot;
  }

  static double wrap_angle(double theta);

 protected:
  std::vector<double> reset_state() override;
  Transition advance(std::span<const double> action) override;
  std::vector<double> observe() const override;
  std::vector<double> state_vector() const override { return {theta_, theta_dot_}; }
  void set_state_vector(const std::vector<double>& s) override;

 private:
  double theta_ = 0.0;
  double theta_dot_ = 0.0;
};

}  // namespace modrl::envs
