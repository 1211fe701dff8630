#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "modrl/algos/updater.hpp"
#include "modrl/common/binary_io.hpp"
#include "modrl/scheme/agent.hpp"
#include "modrl/scheme/channels.hpp"
#include "modrl/scheme/config.hpp"
#include "modrl/scheme/metrics.hpp"

namespace modrl::scheme {

struct CollectionWorker {
  std::size_t index = 0;
  std::size_t grad_index = 0;
  std::unique_ptr<Collector> collector;
};

struct GradientWorker {
  std::size_t index = 0;
  std::vector<std::size_t> collection;  // indices into Topology::collection
  std::unique_ptr<GradientComputer> computer;
  std::optional<algos::Updater> updater;  // decentralized mode only
};

struct UpdateWorker {
  std::optional<algos::Updater> updater;
  funcapprox::ParamVector params;
};

struct Topology {
  SchemeConfig scheme;
  std::shared_ptr<const AgentFactories> factories;
  std::vector<CollectionWorker> collection;
  std::vector<GradientWorker> gradient;
  UpdateWorker update;

  // Parameter hashes of every actor replica: collection, gradient, update.
  std::vector<std::uint64_t> replica_hashes() const;
};

Topology spawn(const SchemeConfig& scheme, std::shared_ptr<const AgentFactories> factories);

// Elementwise mean taken in index order, so every caller that averages the
// same inputs gets bit-identical output.
funcapprox::Gradient average_gradients(std::span<const funcapprox::Gradient* const> grads);

// Cooperative, single-threaded execution of any scheme. Async modes are
// emulated: collection runs `queue_depth` cycles ahead of consumption, and
// async gradient workers compute with parameters refreshed only after their
// own previous gradient. Preemption is not emulated (all cycles complete).
class DeterministicRuntime {
 public:
  DeterministicRuntime(Topology& topo, std::uint64_t target_steps, MetricsSink& sink);

  bool done() const;
  void run_round();
  void run();

  std::uint64_t env_steps() const { return budget_.reserved(); }
  std::uint64_t rounds() const { return rounds_; }
  const funcapprox::ParamVector& params() const;
  const algos::Updater& updater() const;
  void set_target(std::uint64_t target_steps);

  void save_state(ByteWriter& w) const;
  void load_state(ByteReader& r);

 private:
  const funcapprox::ParamVector& latest_for(std::size_t grad) const;
  CycleContext context() const;
  void apply_sync(std::span<const std::optional<algos::StepOutput>> outs, const CycleContext& ctx);

  Topology& topo_;
  MetricsSink& sink_;
  std::uint64_t target_;
  StepBudget budget_;
  std::vector<bool> retired_;
  std::vector<std::deque<CollectedData>> queues_;  // async collection lookahead
  std::uint64_t rounds_ = 0;
};

// Real threads: one per collection worker and gradient worker, plus an
// update thread for async centralized updates. Message passing only; the
// VersionStore is the single shared read point.
class ThreadedRuntime {
 public:
  ThreadedRuntime(Topology& topo, std::uint64_t target_steps, MetricsSink& sink, TaskDelays delays = {});
  ~ThreadedRuntime();

  // Blocks until the budget is spent and all workers have stopped. `poll`
  // runs on the calling thread every `poll_interval` and once at the end.
  void run(const std::function<void()>& poll = {},
           std::chrono::milliseconds poll_interval = std::chrono::milliseconds(20));

  // Thread-safe: stops handing out new collection cycles; run() then drains.
  void request_stop();

  funcapprox::ParamVector params() const;
  std::vector<std::uint64_t> gradient_worker_hashes() const;
  // Calls fn under the update lock with consistent params and optimizer state.
  void with_update_state(const std::function<void(const funcapprox::ParamVector&, const algos::Updater&)>& fn) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace modrl::scheme
