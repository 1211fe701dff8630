#pragma once

#include <span>

#include "modrl/algos/config.hpp"

namespace modrl::algos {

// linear_to_zero: initial * (1 - progress).
// step_factors: initial times every milestone factor whose `at` <= progress.
double decay_schedule(double initial, double progress, DecayKind kind, std::span<const Milestone> milestones = {});
double decay_schedule(double initial, double progress, const DecaySpec& spec);

// Linear anneal from start to end over the first `fraction` of training.
double epsilon_schedule(double start, double end, double fraction, double progress);

}  // namespace modrl::algos
