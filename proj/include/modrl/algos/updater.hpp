#pragma once

#include <vector>

#include "modrl/actors/off_policy_actor.hpp"
#include "modrl/actors/on_policy_actor.hpp"
#include "modrl/algos/config.hpp"
#include "modrl/common/binary_io.hpp"
#include "modrl/funcapprox/optim.hpp"

namespace modrl::algos {

enum class LrKind { kMain, kQ, kPolicy, kAlpha };

struct LayoutGroup {
  funcapprox::Segment segment;
  LrKind lr = LrKind::kMain;
};

struct TargetLink {
  funcapprox::Segment target;
  funcapprox::Segment source;
};

// Which blocks the optimizer trains (and at which rate) and which blocks
// track others as target networks.
struct ParamLayout {
  std::vector<LayoutGroup> groups;
  std::vector<TargetLink> targets;
};

ParamLayout layout_for(const actors::OnPolicyActor& actor);
ParamLayout layout_for(const actors::OffPolicyActor& actor);

// Owns optimizer state. apply() is deterministic in (params, grad, progress,
// internal state), which is what lets every gradient worker in decentralized
// mode reproduce the same step.
class Updater {
 public:
  Updater(AlgoConfig cfg, ParamLayout layout, std::size_t param_count);

  funcapprox::ParamVector apply(const funcapprox::ParamVector& params, const funcapprox::Gradient& grad,
                                double progress);

  const funcapprox::AdamState& state() const { return state_; }
  std::uint64_t updates() const { return updates_; }
  double learning_rate(LrKind kind, double progress) const;

  void save_state(ByteWriter& w) const;
  void load_state(ByteReader& r);

 private:
  AlgoConfig cfg_;
  ParamLayout layout_;
  funcapprox::AdamState state_;
  std::uint64_t updates_ = 0;
};

}  // namespace modrl::algos
