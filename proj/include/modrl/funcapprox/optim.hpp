#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "modrl/funcapprox/mlp.hpp"

namespace modrl::funcapprox {

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Rejects non-finite gradients with NumericFault and
// leaves the inputs untouched in that case. The returned params carry
// version + 1.
std::pair<ParamVector, AdamState> adam_step(const ParamVector& params, const Gradient& grad,
                                            const AdamState& state, double lr, double beta1 = 0.9,
                                            double beta2 = 0.999, double epsilon = 1e-8);

// A contiguous slice of the flat parameter vector with its own learning
// rate. Coordinates outside every group are not touched by the optimizer.
struct ParamGroup {
  std::size_t offset = 0;
  std::size_t size = 0;
  double lr = 0.0;
};

// In-place grouped variant: one shared step counter, per-group rates.
void adam_step_grouped(ParamVector& params, const Gradient& grad, AdamState& state,
                       std::span<const ParamGroup> groups, const AdamHyper& hyper = {});

double l2_norm(std::span<const double> v);

Gradient clip_grad_norm(const Gradient& grad, double max_norm);

// target <- tau * target + (1 - tau) * source
ParamVector polyak_update(const ParamVector& target, const ParamVector& source, double tau);
void polyak_update(std::span<double> target, std::span<const double> source, double tau);

void check_finite(std::span<const double> v, const char* what);

}  // namespace modrl::funcapprox
