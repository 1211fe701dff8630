#include "modrl/envs/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "modrl/common/errors.hpp"

namespace modrl::envs {

Pendulum::Pendulum(std::uint64_t seed)
    : EpisodicEnv(seed, 3, ActionSpace::continuous({-kMaxTorque}, {kMaxTorque}), kMaxSteps) {}

double Pendulum::wrap_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta + std::numbers::pi, two_pi);
  if (t < 0.0) t += two_pi;
  return t - std::numbers::pi;
}

std::vector<double> Pendulum::reset_state() {
  theta_ = rng_.uniform(-std::numbers::pi, std::numbers::pi);
  theta_dot_ = rng_.uniform(-1.0, 1.0);
  return observe();
}

EpisodicEnv::Transition Pendulum::advance(std::span<const double> action) {
  const double u = action[0];
  const double th = wrap_angle(theta_);
  Transition t;
  t.reward = -(th * th + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);
  double next_dot = theta_dot_ + (3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                                  3.0 / (kMass * kLength * kLength) * u) * kDt;
  next_dot = std::clamp(next_dot, -kMaxSpeed, kMaxSpeed);
  theta_ = theta_ + next_dot * kDt;
  theta_dot_ = next_dot;
  return t;
}

std::vector<double> Pendulum::observe() const { return {std::cos(theta_), std::sin(theta_), theta_dot_}; }

void Pendulum::set_state_vector(const std::vector<double>& s) {
  if (s.size() != 2) throw IntegrityError("pendulum state must have 2 entries");
  theta_ = s[0];
  theta_dot_ = s[1];
}

}  // namespace modrl::envs
