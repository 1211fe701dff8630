#include "modrl/algos/schedule.hpp"

#include <algorithm>

#include "modrl/common/errors.hpp"

namespace modrl::algos {

double decay_schedule(double initial, double progress, DecayKind kind, std::span<const Milestone> milestones) {
  if (!(progress >= 0.0 && progress <= 1.0)) throw ConfigError("decay progress must lie in [0, 1]");
  switch (kind) {
    case DecayKind::kNone:
      return initial;
    case DecayKind::kLinearToZero:
      return initial * (1.0 - progress);
    case DecayKind::kStepFactors: {
      double v = initial;
      for (const auto& m : milestones) {
        if (progress >= m.at) v *= m.factor;
      }
      return v;
    }
  }
  return initial;
}

double decay_schedule(double initial, double progress, const DecaySpec& spec) {
  return decay_schedule(initial, progress, spec.kind, spec.milestones);
}

double epsilon_schedule(double start, double end, double fraction, double progress) {
  if (fraction <= 0.0) return end;
  const double f = std::clamp(progress / fraction, 0.0, 1.0);
  return f >= 1.0 ? end : start + f * (end - start);
}

}  // namespace modrl::algos
