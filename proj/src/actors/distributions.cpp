#include "modrl/actors/distributions.hpp"

#include <algorithm>

namespace modrl::actors {

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

double categorical_entropy(std::span<const double> log_probs) {
  double h = 0.0;
  for (double lp : log_probs) h -= std::exp(lp) * lp;
  return h;
}

double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t j = 0; j < action.size(); ++j) {
    const double z = (action[j] - mean[j]) * std::exp(-log_std[j]);
    lp += -0.5 * z * z - log_std[j] - 0.5 * kLogTwoPi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * (1.0 + kLogTwoPi);
  return h;
}

}  // namespace modrl::actors
