#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <thread>

#include "modrl/common/errors.hpp"
#include "modrl/scheme/runtime.hpp"

namespace modrl::scheme {

namespace {

using Clock = std::chrono::steady_clock;
using funcapprox::Gradient;
using funcapprox::ParamVector;

struct Request {
  std::shared_ptr<const ParamVector> params;
  CycleContext ctx;
};

struct GradMsg {
  Gradient gradient;
  double progress = 0.0;
};

constexpr std::uint64_t kDelayStream = 0xDE1A75;

double jittered(double ms, double jitter, Rng& rng) {
  if (ms <= 0.0) return 0.0;
  return ms * (1.0 + (jitter > 0.0 ? rng.uniform(-jitter, jitter) : 0.0));
}

}  // namespace

struct ThreadedRuntime::Impl {
  struct GradChannels {
    std::vector<std::unique_ptr<BoundedQueue<Request>>> requests;
    std::unique_ptr<BoundedQueue<CollectedData>> data;
    std::atomic<bool> preempt{false};
    mutable std::mutex mu;
    std::uint64_t final_hash = 0;
  };

  Topology& topo;
  std::uint64_t target;
  MetricsSink& sink;
  TaskDelays delays;
  StepBudget budget;
  VersionStore store;
  std::atomic<bool> stop{false};
  std::mutex err_mu;
  std::exception_ptr error;
  std::vector<std::unique_ptr<GradChannels>> grads;
  std::unique_ptr<SyncReducer> reducer;
  std::unique_ptr<BoundedQueue<GradMsg>> update_queue;
  mutable std::mutex update_mu;
  std::atomic<std::size_t> grads_running{0};
  std::mutex done_mu;
  std::condition_variable done_cv;

  Impl(Topology& t, std::uint64_t target_steps, MetricsSink& s, TaskDelays d)
      : topo(t), target(target_steps), sink(s), delays(std::move(d)), budget(target_steps), store(t.update.params) {
    const auto& sc = topo.scheme;
    for (const auto& gw : topo.gradient) {
      auto gc = std::make_unique<GradChannels>();
      for (std::size_t i = 0; i < gw.collection.size(); ++i) gc->requests.push_back(std::make_unique<BoundedQueue<Request>>(1));
      gc->data = std::make_unique<BoundedQueue<CollectedData>>(sc.queue_depth * gw.collection.size());
      grads.push_back(std::move(gc));
    }
    if (sc.grad_communication == Communication::kSync) {
      SyncReducer::Apply apply;
      if (sc.update_mode == UpdateMode::kCentralized) {
        apply = [this](const SyncReducer::Contributions& c, double progress) { return apply_centralized(c, progress); };
      }
      reducer = std::make_unique<SyncReducer>(topo.gradient.size(), std::move(apply));
    } else {
      update_queue = std::make_unique<BoundedQueue<GradMsg>>(sc.queue_depth);
    }
  }

  CycleContext ctx_now() const {
    CycleContext c;
    c.global_env_steps = budget.reserved();
    c.progress = target == 0 ? 1.0 : std::min(1.0, static_cast<double>(c.global_env_steps) / static_cast<double>(target));
    return c;
  }

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(err_mu);
      if (!error) error = e;
    }
    shutdown();
  }

  void shutdown() {
    stop = true;
    for (auto& gc : grads) {
      for (auto& q : gc->requests) q->close();
      gc->data->close();
    }
    if (reducer) reducer->close();
    if (update_queue) update_queue->close();
    store.close();
    done_cv.notify_all();
  }

  template <typename F>
  void guarded(F&& body) {
    try {
      body();
    } catch (const ChannelClosed&) {
      // Normal exit path during shutdown.
    } catch (...) {
      fail(std::current_exception());
    }
  }

  bool pause(double ms) {
    if (ms <= 0.0) return true;
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(ms));
    return sleep_until_or(deadline, [this] { return stop.load(); });
  }

  // One cycle with the injected duration spread evenly over its steps.
  CollectedData run_cycle(CollectionWorker& cw, const CycleContext& ctx, const std::atomic<bool>* preempt, Rng& rng) {
    auto& col = *cw.collector;
    double ms = jittered(delays.collection_ms, delays.collection_jitter, rng);
    if (auto it = delays.stragglers.find(cw.index); it != delays.stragglers.end()) ms *= it->second;
    const auto interrupted = [&] { return stop.load() || (preempt && preempt->load()); };
    const auto T = col.steps_per_cycle();
    const auto start = Clock::now();
    col.begin(ctx);
    for (std::size_t t = 0; t < T; ++t) {
      if (interrupted()) break;
      col.step();
      if (ms > 0.0) {
        const auto deadline =
            start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(ms * static_cast<double>(t + 1) / static_cast<double>(T)));
        if (!sleep_until_or(deadline, interrupted)) break;
      }
    }
    auto d = col.finish();
    d.worker = cw.index;
    return d;
  }

  void record(const CollectedData& d) {
    sink.add_env_steps(d.env_steps);
    sink.add_episodes(d.episode_rewards, d.episode_successes);
  }

  void sync_collection_loop(CollectionWorker& cw, std::size_t local) {
    guarded([&] {
      auto& gc = *grads[cw.grad_index];
      Rng rng(derive_seed(delays.seed, kDelayStream, cw.index));
      const auto cycle = cw.collector->env_steps_per_cycle();
      while (true) {
        Request req = gc.requests[local]->pop();
        if (!budget.reserve(cycle)) {
          CollectedData r;
          r.worker = cw.index;
          r.retired = true;
          gc.data->push(std::move(r));
          return;
        }
        cw.collector->set_params(*req.params);
        auto d = run_cycle(cw, req.ctx, &gc.preempt, rng);
        if (d.env_steps < cycle) budget.refund(cycle - d.env_steps);
        record(d);
        gc.data->push(std::move(d));
      }
    });
  }

  void async_collection_loop(CollectionWorker& cw) {
    guarded([&] {
      auto& gc = *grads[cw.grad_index];
      Rng rng(derive_seed(delays.seed, kDelayStream, cw.index));
      const auto cycle = cw.collector->env_steps_per_cycle();
      while (!stop && budget.reserve(cycle)) {
        cw.collector->set_params(*store.snapshot());
        auto d = run_cycle(cw, ctx_now(), nullptr, rng);
        if (d.env_steps < cycle) budget.refund(cycle - d.env_steps);
        record(d);
        gc.data->push(std::move(d));
      }
      CollectedData r;
      r.worker = cw.index;
      r.retired = true;
      gc.data->push(std::move(r));
    });
  }

  std::shared_ptr<const ParamVector> apply_centralized(const SyncReducer::Contributions& c, double progress) {
    std::vector<const Gradient*> gs;
    for (const auto& g : c) {
      if (g) gs.push_back(&*g);
    }
    if (gs.empty()) return store.snapshot();
    std::vector<LagSample> lags;
    {
      std::lock_guard lock(update_mu);
      auto& up = topo.update;
      for (const auto* g : gs) {
        auto s = lag_samples(*g, up.params.version);
        lags.insert(lags.end(), s.begin(), s.end());
      }
      up.params = up.updater->apply(up.params, average_gradients(gs), progress);
      store.publish(up.params);
    }
    sink.add_update(lags);
    pause(delays.apply_ms);
    return store.snapshot();
  }

  void update_loop() {
    guarded([&] {
      Rng rng(derive_seed(delays.seed, kDelayStream + 2, 0));
      while (true) {
        GradMsg msg = update_queue->pop();
        std::vector<LagSample> lags;
        bool dropped = false;
        {
          std::lock_guard lock(update_mu);
          auto& up = topo.update;
          lags = lag_samples(msg.gradient, up.params.version);
          if (topo.scheme.max_grad_lag && lags[1].delta > *topo.scheme.max_grad_lag) {
            dropped = true;
          } else {
            up.params = up.updater->apply(up.params, msg.gradient, msg.progress);
            store.publish(up.params);
          }
        }
        if (dropped) {
          sink.add_dropped();
        } else {
          sink.add_update(lags);
          pause(delays.apply_ms);
        }
      }
    });
  }

  std::vector<CollectedData> gather_sync(GradientWorker& gw, GradChannels& gc, std::vector<std::size_t>& active) {
    std::vector<CollectedData> data;
    gc.preempt = false;
    std::shared_ptr<const ParamVector> snap;
    {
      std::lock_guard lock(gc.mu);
      snap = std::make_shared<const ParamVector>(gw.computer->params());
    }
    const auto ctx = ctx_now();
    const auto t0 = Clock::now();
    for (auto i : active) gc.requests[i]->push({snap, ctx});
    const auto N = active.size();
    std::size_t need = N + 1;
    if (topo.scheme.preemption_threshold) {
      need = static_cast<std::size_t>(std::ceil(*topo.scheme.preemption_threshold * static_cast<double>(N) - 1e-9));
    }
    std::vector<std::size_t> still;
    for (std::size_t k = 0; k < N; ++k) {
      auto d = gc.data->pop();
      if (k + 1 >= need) gc.preempt = true;
      const auto local = d.worker - gw.collection.front();
      if (d.retired) continue;
      still.push_back(local);
      data.push_back(std::move(d));
    }
    std::sort(still.begin(), still.end());
    active = std::move(still);
    std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) { return a.worker < b.worker; });
    if (!data.empty()) sink.add_cycle_time(std::chrono::duration<double>(Clock::now() - t0).count());
    return data;
  }

  std::vector<CollectedData> gather_async(GradChannels& gc, std::size_t& live) {
    std::vector<CollectedData> data;
    while (live > 0 && data.size() < live) {
      auto d = gc.data->pop();
      if (d.retired) {
        --live;
      } else {
        data.push_back(std::move(d));
      }
    }
    return data;
  }

  void gradient_loop(GradientWorker& gw) {
    guarded([&] {
      auto& gc = *grads[gw.index];
      const auto& sc = topo.scheme;
      Rng rng(derive_seed(delays.seed, kDelayStream + 1, gw.index));
      std::vector<std::size_t> active(gw.collection.size());
      for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
      std::size_t live = gw.collection.size();
      while (!stop) {
        const auto ctx = ctx_now();
        std::vector<CollectedData> data;
        if (sc.col_communication == Communication::kSync) {
          if (active.empty()) break;
          data = gather_sync(gw, gc, active);
        } else {
          if (live == 0) break;
          data = gather_async(gc, live);
        }
        if (data.empty()) continue;
        gw.computer->ingest(std::move(data), ctx);
        const auto n = gw.computer->gradients_per_round();
        for (std::size_t k = 0; k < n && !stop; ++k) {
          auto out = gw.computer->next_gradient(ctx);
          const bool empty = out.gradient.values.empty();
          if (!empty) {
            sink.add_loss(out.stats);
            pause(jittered(delays.gradient_ms, delays.gradient_jitter, rng));
          }
          if (sc.grad_communication == Communication::kSync) {
            auto outcome = reducer->submit(gw.index, empty ? std::nullopt : std::optional<Gradient>(out.gradient),
                                           ctx.progress);
            if (sc.update_mode == UpdateMode::kCentralized) {
              std::lock_guard lock(gc.mu);
              gw.computer->set_params(*outcome.params);
            } else {
              apply_decentralized(gw, gc, *outcome.contributions, outcome.progress);
            }
          } else {
            if (!empty) update_queue->push({std::move(out.gradient), ctx.progress});
            auto snap = store.snapshot();
            if (snap->version > gw.computer->params().version) gw.computer->set_params(*snap);
          }
        }
      }
    });
    if (reducer) reducer->retire(gw.index);
    grads[gw.index]->final_hash = funcapprox::hash_params(gw.computer->params().values);
    if (--grads_running == 0) {
      if (update_queue) update_queue->close();
      done_cv.notify_all();
    }
  }

  void apply_decentralized(GradientWorker& gw, GradChannels& gc, const SyncReducer::Contributions& c,
                           double progress) {
    std::vector<const Gradient*> gs;
    for (const auto& g : c) {
      if (g) gs.push_back(&*g);
    }
    if (gs.empty()) return;
    const auto mean = average_gradients(gs);
    ParamVector next;
    std::vector<LagSample> lags;
    {
      std::lock_guard lock(gc.mu);
      const auto& cur = gw.computer->params();
      for (const auto* g : gs) {
        auto s = lag_samples(*g, cur.version);
        lags.insert(lags.end(), s.begin(), s.end());
      }
      next = gw.updater->apply(cur, mean, progress);
      gw.computer->set_params(next);
    }
    if (gw.index == 0) {
      {
        std::lock_guard lock(update_mu);
        topo.update.params = next;
      }
      store.publish(std::move(next));
      sink.add_update(lags);
      pause(delays.apply_ms);
    }
  }
};

ThreadedRuntime::ThreadedRuntime(Topology& topo, std::uint64_t target_steps, MetricsSink& sink, TaskDelays delays)
    : impl_(std::make_unique<Impl>(topo, target_steps, sink, std::move(delays))) {}

ThreadedRuntime::~ThreadedRuntime() = default;

void ThreadedRuntime::run(const std::function<void()>& poll, std::chrono::milliseconds poll_interval) {
  auto& im = *impl_;
  auto& topo = im.topo;
  const auto& sc = topo.scheme;
  std::vector<std::thread> threads;
  im.grads_running = topo.gradient.size();
  std::thread updater;
  if (im.update_queue) updater = std::thread([&] { im.update_loop(); });
  for (auto& gw : topo.gradient) threads.emplace_back([&im, &gw] { im.gradient_loop(gw); });
  std::vector<std::thread> collectors;
  for (auto& cw : topo.collection) {
    if (sc.col_communication == Communication::kSync) {
      const auto local = cw.index - topo.gradient[cw.grad_index].collection.front();
      collectors.emplace_back([&im, &cw, local] { im.sync_collection_loop(cw, local); });
    } else {
      collectors.emplace_back([&im, &cw] { im.async_collection_loop(cw); });
    }
  }
  {
    std::unique_lock lock(im.done_mu);
    while (im.grads_running.load() > 0 && !im.stop.load()) {
      im.done_cv.wait_for(lock, poll_interval);
      if (poll) {
        lock.unlock();
        try {
          poll();
        } catch (...) {
          im.fail(std::current_exception());
        }
        lock.lock();
      }
    }
  }
  for (auto& t : threads) t.join();
  if (updater.joinable()) updater.join();
  for (auto& gc : im.grads) {
    for (auto& q : gc->requests) q->close();
    gc->data->close();
  }
  for (auto& t : collectors) t.join();
  im.store.close();
  if (poll && !im.error) poll();
  if (im.error) {
    std::string what = "unknown error";
    try {
      std::rethrow_exception(im.error);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw std::runtime_error("worker failure: " + what + " (last consistent version " +
                             std::to_string(im.store.version()) + ")");
  }
}

void ThreadedRuntime::request_stop() { impl_->budget.close(); }

funcapprox::ParamVector ThreadedRuntime::params() const { return *impl_->store.snapshot(); }

std::vector<std::uint64_t> ThreadedRuntime::gradient_worker_hashes() const {
  std::vector<std::uint64_t> out;
  for (const auto& gc : impl_->grads) out.push_back(gc->final_hash);
  return out;
}

void ThreadedRuntime::with_update_state(
    const std::function<void(const funcapprox::ParamVector&, const algos::Updater&)>& fn) const {
  auto& im = *impl_;
  if (im.topo.update.updater) {
    std::lock_guard lock(im.update_mu);
    fn(im.topo.update.params, *im.topo.update.updater);
  } else {
    auto& gw = im.topo.gradient.front();
    std::lock_guard lock(im.grads.front()->mu);
    fn(gw.computer->params(), *gw.updater);
  }
}

}  // namespace modrl::scheme
