#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace modrl::actors {

inline constexpr double kLogTwoPi = 1.8378770664093454836;  // ln(2 pi)
inline constexpr double kSquashEpsilon = 1e-6;
inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Log-softmax of one row of logits.
std::vector<double> log_softmax(std::span<const double> logits);

// Entropy of a categorical given its log-probabilities.
double categorical_entropy(std::span<const double> log_probs);

// Sum over dims of log N(a; mean, exp(log_std)).
double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                         std::span<const double> log_std);

double gaussian_entropy(std::span<const double> log_std);

}  // namespace modrl::actors
