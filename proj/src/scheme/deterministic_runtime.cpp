#include <algorithm>

#include "modrl/common/errors.hpp"
#include "modrl/funcapprox/checkpoint.hpp"
#include "modrl/scheme/runtime.hpp"
#include "modrl/storage/rollout.hpp"

namespace modrl::scheme {

namespace {

void write_data(ByteWriter& w, const CollectedData& d) {
  w.u64(d.worker);
  w.u8(d.retired);
  w.u64(d.collected_with_version);
  w.u64(d.env_steps);
  w.u8(d.preempted);
  w.u8(d.rollout.has_value());
  if (d.rollout) storage::write_rollout(w, *d.rollout);
  w.u64(d.transitions.size());
  for (const auto& e : d.transitions) storage::write_entry(w, e);
  w.u64(d.episodes.size());
  for (const auto& ep : d.episodes) {
    w.u64(ep.size());
    for (const auto& e : ep) storage::write_entry(w, e);
  }
  w.f64s(d.episode_rewards);
  w.f64s(d.episode_successes);
}

CollectedData read_data(ByteReader& r) {
  CollectedData d;
  d.worker = r.u64();
  d.retired = r.u8() != 0;
  d.collected_with_version = r.u64();
  d.env_steps = r.u64();
  d.preempted = r.u8() != 0;
  if (r.u8()) d.rollout = storage::read_rollout(r);
  auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) d.transitions.push_back(storage::read_entry(r));
  n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::vector<storage::ReplayEntry> ep;
    const auto m = r.u64();
    for (std::uint64_t j = 0; j < m; ++j) ep.push_back(storage::read_entry(r));
    d.episodes.push_back(std::move(ep));
  }
  d.episode_rewards = r.f64s();
  d.episode_successes = r.f64s();
  return d;
}

}  // namespace

DeterministicRuntime::DeterministicRuntime(Topology& topo, std::uint64_t target_steps, MetricsSink& sink)
    : topo_(topo),
      sink_(sink),
      target_(target_steps),
      budget_(target_steps),
      retired_(topo.gradient.size(), false),
      queues_(topo.collection.size()) {}

void DeterministicRuntime::set_target(std::uint64_t target_steps) {
  const auto used = budget_.reserved();
  target_ = target_steps;
  budget_.reset(target_steps, used);
  std::fill(retired_.begin(), retired_.end(), false);
}

bool DeterministicRuntime::done() const {
  if (std::all_of(retired_.begin(), retired_.end(), [](bool r) { return r; })) return true;
  if (budget_.reserved() < target_) return false;
  return std::all_of(queues_.begin(), queues_.end(), [](const auto& q) { return q.empty(); });
}

const funcapprox::ParamVector& DeterministicRuntime::latest_for(std::size_t grad) const {
  if (topo_.scheme.update_mode == UpdateMode::kDecentralized) return topo_.gradient[grad].computer->params();
  return topo_.update.params;
}

const funcapprox::ParamVector& DeterministicRuntime::params() const { return latest_for(0); }

const algos::Updater& DeterministicRuntime::updater() const {
  if (topo_.update.updater) return *topo_.update.updater;
  return *topo_.gradient.front().updater;
}

CycleContext DeterministicRuntime::context() const {
  CycleContext ctx;
  ctx.global_env_steps = budget_.reserved();
  ctx.progress = target_ == 0 ? 1.0
                              : std::min(1.0, static_cast<double>(ctx.global_env_steps) / static_cast<double>(target_));
  return ctx;
}

void DeterministicRuntime::run() {
  while (!done()) run_round();
}

void DeterministicRuntime::run_round() {
  const auto& scheme = topo_.scheme;
  const CycleContext ctx = context();
  auto record = [&](const CollectedData& d) {
    sink_.add_env_steps(d.env_steps);
    sink_.add_episodes(d.episode_rewards, d.episode_successes);
  };

  // Collection.
  std::vector<bool> active(topo_.gradient.size(), false);
  for (auto& gw : topo_.gradient) {
    if (retired_[gw.index]) continue;
    std::vector<CollectedData> data;
    for (auto ci : gw.collection) {
      auto& cw = topo_.collection[ci];
      const auto cycle = cw.collector->env_steps_per_cycle();
      if (scheme.col_communication == Communication::kSync) {
        if (!budget_.reserve(cycle)) continue;
        cw.collector->set_params(latest_for(gw.index));
        auto d = cw.collector->collect(ctx);
        d.worker = ci;
        record(d);
        data.push_back(std::move(d));
      } else {
        auto& q = queues_[ci];
        while (q.size() < scheme.queue_depth && budget_.reserve(cycle)) {
          auto d = cw.collector->collect(context());
          d.worker = ci;
          record(d);
          q.push_back(std::move(d));
          cw.collector->set_params(latest_for(gw.index));
        }
        if (!q.empty()) {
          data.push_back(std::move(q.front()));
          q.pop_front();
        }
      }
    }
    if (data.empty()) {
      retired_[gw.index] = true;
      continue;
    }
    active[gw.index] = true;
    gw.computer->ingest(std::move(data), ctx);
  }

  // Gradients.
  std::size_t n = 0;
  for (auto& gw : topo_.gradient) {
    if (active[gw.index]) n = std::max(n, gw.computer->gradients_per_round());
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (scheme.grad_communication == Communication::kSync) {
      std::vector<std::optional<algos::StepOutput>> outs(topo_.gradient.size());
      for (auto& gw : topo_.gradient) {
        if (!active[gw.index]) continue;
        auto out = gw.computer->next_gradient(ctx);
        if (out.gradient.values.empty()) continue;
        sink_.add_loss(out.stats);
        outs[gw.index] = std::move(out);
      }
      apply_sync(outs, ctx);
    } else {
      auto& up = topo_.update;
      for (auto& gw : topo_.gradient) {
        if (!active[gw.index]) continue;
        auto out = gw.computer->next_gradient(ctx);
        if (!out.gradient.values.empty()) {
          sink_.add_loss(out.stats);
          const auto applied_at = up.params.version;
          const auto lags = lag_samples(out.gradient, applied_at);
          if (scheme.max_grad_lag && lags[1].delta > *scheme.max_grad_lag) {
            sink_.add_dropped();
          } else {
            up.params = up.updater->apply(up.params, out.gradient, ctx.progress);
            sink_.add_update(lags);
          }
        }
        gw.computer->set_params(up.params);
      }
    }
  }
  ++rounds_;
}

void DeterministicRuntime::apply_sync(std::span<const std::optional<algos::StepOutput>> outs, const CycleContext& ctx) {
  std::vector<const funcapprox::Gradient*> grads;
  for (const auto& o : outs) {
    if (o) grads.push_back(&o->gradient);
  }
  if (grads.empty()) return;
  const auto mean = average_gradients(grads);
  if (topo_.scheme.update_mode == UpdateMode::kCentralized) {
    auto& up = topo_.update;
    std::vector<LagSample> lags;
    for (const auto* g : grads) {
      auto s = lag_samples(*g, up.params.version);
      lags.insert(lags.end(), s.begin(), s.end());
    }
    up.params = up.updater->apply(up.params, mean, ctx.progress);
    for (auto& gw : topo_.gradient) gw.computer->set_params(up.params);
    sink_.add_update(lags);
  } else {
    std::vector<LagSample> lags;
    for (const auto* g : grads) {
      auto s = lag_samples(*g, topo_.gradient.front().computer->params().version);
      lags.insert(lags.end(), s.begin(), s.end());
    }
    for (auto& gw : topo_.gradient) {
      gw.computer->set_params(gw.updater->apply(gw.computer->params(), mean, ctx.progress));
    }
    topo_.update.params = topo_.gradient.front().computer->params();
    sink_.add_update(lags);
  }
}

void DeterministicRuntime::save_state(ByteWriter& w) const {
  w.u64(target_);
  w.u64(budget_.reserved());
  w.u64(rounds_);
  for (bool r : retired_) w.u8(r ? 1 : 0);
  funcapprox::write_params(w, topo_.update.params);
  w.u8(topo_.update.updater.has_value());
  if (topo_.update.updater) topo_.update.updater->save_state(w);
  for (const auto& c : topo_.collection) c.collector->save_state(w);
  for (const auto& g : topo_.gradient) {
    g.computer->save_state(w);
    w.u8(g.updater.has_value());
    if (g.updater) g.updater->save_state(w);
  }
  for (const auto& q : queues_) {
    w.u64(q.size());
    for (const auto& d : q) write_data(w, d);
  }
}

void DeterministicRuntime::load_state(ByteReader& r) {
  const auto target = r.u64();
  const auto used = r.u64();
  rounds_ = r.u64();
  for (std::size_t i = 0; i < retired_.size(); ++i) retired_[i] = r.u8() != 0;
  topo_.update.params = funcapprox::read_params(r);
  if (r.u8() != topo_.update.updater.has_value()) throw IntegrityError("checkpoint update mode mismatch");
  if (topo_.update.updater) topo_.update.updater->load_state(r);
  for (auto& c : topo_.collection) c.collector->load_state(r);
  for (auto& g : topo_.gradient) {
    g.computer->load_state(r);
    if (r.u8() != g.updater.has_value()) throw IntegrityError("checkpoint update mode mismatch");
    if (g.updater) g.updater->load_state(r);
  }
  for (auto& q : queues_) {
    q.clear();
    const auto n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) q.push_back(read_data(r));
  }
  target_ = target;
  budget_.reset(target, used);
}

}  // namespace modrl::scheme
