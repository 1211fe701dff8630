#include "modrl/algos/updater.hpp"

#include <algorithm>

#include "modrl/algos/schedule.hpp"
#include "modrl/common/errors.hpp"
#include "modrl/funcapprox/checkpoint.hpp"

namespace modrl::algos {

ParamLayout layout_for(const actors::OnPolicyActor& actor) {
  ParamLayout l;
  l.groups.push_back({{0, actor.params().size()}, LrKind::kMain});
  return l;
}

ParamLayout layout_for(const actors::OffPolicyActor& actor) {
  ParamLayout l;
  if (actor.mode() == actors::OffPolicyMode::kDdqn) {
    l.groups.push_back({actor.q_segment(0), LrKind::kMain});
    l.targets.push_back({actor.q_target_segment(0), actor.q_segment(0)});
  } else {
    l.groups.push_back({actor.policy_segment(), LrKind::kPolicy});
    l.groups.push_back({actor.q_segment(0), LrKind::kQ});
    l.groups.push_back({actor.q_segment(1), LrKind::kQ});
    l.groups.push_back({actor.log_alpha_segment(), LrKind::kAlpha});
    l.targets.push_back({actor.q_target_segment(0), actor.q_segment(0)});
    l.targets.push_back({actor.q_target_segment(1), actor.q_segment(1)});
  }
  return l;
}

Updater::Updater(AlgoConfig cfg, ParamLayout layout, std::size_t param_count)
    : cfg_(std::move(cfg)), layout_(std::move(layout)), state_(funcapprox::AdamState::zeros(param_count)) {}

double Updater::learning_rate(LrKind kind, double progress) const {
  double base = cfg_.lr;
  switch (kind) {
    case LrKind::kMain:
      base = cfg_.kind == AlgoKind::kSac ? cfg_.lr_q : cfg_.lr;
      break;
    case LrKind::kQ: base = cfg_.lr_q; break;
    case LrKind::kPolicy: base = cfg_.lr_policy; break;
    case LrKind::kAlpha: base = cfg_.lr_alpha; break;
  }
  return decay_schedule(base, std::clamp(progress, 0.0, 1.0), cfg_.lr_decay);
}

funcapprox::ParamVector Updater::apply(const funcapprox::ParamVector& params, const funcapprox::Gradient& grad,
                                       double progress) {
  if (grad.size() != params.size() || state_.first_moment.size() != params.size()) {
    throw ConfigError("gradient length does not match parameters");
  }
  funcapprox::check_finite(grad.values, "gradient");
  std::vector<funcapprox::ParamGroup> groups;
  for (const auto& g : layout_.groups) {
    groups.push_back({g.segment.offset, g.segment.size, learning_rate(g.lr, progress)});
  }
  funcapprox::ParamVector next = params;
  funcapprox::adam_step_grouped(next, grad, state_, groups, cfg_.adam);
  ++updates_;
  std::span<double> values(next.values);
  for (const auto& t : layout_.targets) {
    auto target = t.target.of(values);
    std::span<const double> source = t.source.of(std::span<const double>(next.values));
    if (cfg_.kind == AlgoKind::kSac) {
      funcapprox::polyak_update(target, source, cfg_.polyak);
    } else if (cfg_.target_tau) {
      funcapprox::polyak_update(target, source, *cfg_.target_tau);
    } else if (updates_ % cfg_.target_update_period == 0) {
      std::copy(source.begin(), source.end(), target.begin());
    }
  }
  return next;
}

void Updater::save_state(ByteWriter& w) const {
  funcapprox::write_adam(w, state_);
  w.u64(updates_);
}

void Updater::load_state(ByteReader& r) {
  auto s = funcapprox::read_adam(r);
  const auto u = r.u64();
  if (s.first_moment.size() != state_.first_moment.size()) throw IntegrityError("optimizer state size mismatch");
  state_ = std::move(s);
  updates_ = u;
}

}  // namespace modrl::algos
