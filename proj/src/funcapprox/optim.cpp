#include "modrl/funcapprox/optim.hpp"

#include <cmath>
#include <string>

#include "modrl/common/errors.hpp"

namespace modrl::funcapprox {

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericFault(std::string("non-finite value in ") + what);
  }
}

std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const Gradient& grad,
                                            const AdamState& state, double lr, double beta1, double beta2,
                                            double epsilon) {
  ParamVector next = params;
  AdamState next_state = state;
  const ParamGroup all{0, params.size(), lr};
  adam_step_grouped(next, grad, next_state, std::span<const ParamGroup>(&all, 1), {beta1, beta2, epsilon});
  return {std::move(next), std::move(next_state)};
}

void adam_step_grouped(ParamVector& params, const Gradient& grad, AdamState& state,
                       std::span<const ParamGroup> groups, const AdamHyper& hyper) {
  const std::size_t n = params.size();
  if (grad.size() != n) throw ConfigError("gradient length does not match parameters");
  if (state.first_moment.size() != n || state.second_moment.size() != n) {
    throw ConfigError("optimizer state length does not match parameters");
  }
  for (const auto& g : groups) {
    if (g.offset + g.size > n) throw ConfigError("parameter group out of range");
    if (!(g.lr > 0.0)) throw ConfigError("learning rate must be positive");
  }
  check_finite(grad.values, "gradient");

  const auto t = static_cast<double>(state.step_count + 1);
  const double bias1 = 1.0 - std::pow(hyper.beta1, t);
  const double bias2 = 1.0 - std::pow(hyper.beta2, t);
  for (const auto& g : groups) {
    for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
      const double gi = grad.values[i];
      double& m = state.first_moment[i];
      double& v = state.second_moment[i];
      m = hyper.beta1 * m + (1.0 - hyper.beta1) * gi;
      v = hyper.beta2 * v + (1.0 - hyper.beta2) * gi * gi;
      const double m_hat = m / bias1;
      const double v_hat = v / bias2;
      params.values[i] -= g.lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  }
  state.step_count += 1;
  params.version += 1;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Gradient clip_grad_norm(const Gradient& grad, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("max_norm must be positive");
  Gradient out = grad;
  const double norm = l2_norm(grad.values);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& x : out.values) x *= scale;
  }
  return out;
}

ParamVector polyak_update(const ParamVector& target, const ParamVector& source, double tau) {
  ParamVector out = target;
  polyak_update(out.values, source.values, tau);
  return out;
}

void polyak_update(std::span<double> target, std::span<const double> source, double tau) {
  if (target.size() != source.size()) throw ConfigError("polyak update length mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("polyak tau must lie in [0, 1]");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = tau * target[i] + (1.0 - tau) * source[i];
}

}  // namespace modrl::funcapprox
