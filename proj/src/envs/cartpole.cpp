#include "modrl/envs/cartpole.hpp"

#include <cmath>

#include "modrl/common/errors.hpp"

namespace modrl::envs {

CartPole::CartPole(std::uint64_t seed)
    : EpisodicEnv(seed, 4, ActionSpace::discrete(2), kMaxSteps) {}

std::vector<double> CartPole::reset_state() {
  for (auto& v : state_) v = rng_.uniform(-0.05, 0.05);
  return observe();
}

EpisodicEnv::Transition CartPole::advance(std::span<const double> action) {
  auto& [x, x_dot, theta, theta_dot] = state_;
  const double force = action[0] == 1.0 ? kForceMag : -kForceMag;
  const double total_mass = kMassCart + kMassPole;
  const double polemass_length = kMassPole * kHalfLength;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp = (force + polemass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  x += kTau * x_dot;
  x_dot += kTau * x_acc;
  theta += kTau * theta_dot;
  theta_dot += kTau * theta_acc;

  Transition t;
  t.reward = 1.0;
  t.terminated = x < -kXLimit || x > kXLimit || theta < -kThetaLimit || theta > kThetaLimit;
  return t;
}

void CartPole::set_state_vector(const std::vector<double>& s) {
  if (s.size() != 4) throw IntegrityError("cartpole state must have 4 entries");
  for (std::size_t i = 0; i < 4; ++i) state_[i] = s[i];
}

}  // namespace modrl::envs
