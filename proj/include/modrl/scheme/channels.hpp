#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <vector>
#include <memory>
#include <mutex>
#include <optional>

#include "modrl/common/errors.hpp"
#include "modrl/funcapprox/mlp.hpp"

namespace modrl::scheme {

// FIFO with backpressure. close() wakes every waiter; push on a closed
// queue and pop on a closed, drained queue throw ChannelClosed.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(T item) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) throw ChannelClosed();
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  T pop() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) throw ChannelClosed();
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mu_);
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

// The single shared read point: an atomic (params, version) snapshot.
class VersionStore {
 public:
  using Snapshot = std::shared_ptr<const funcapprox::ParamVector>;

  explicit VersionStore(funcapprox::ParamVector initial);

  Snapshot snapshot() const;
  Version version() const;
  // Requires params.version == version() + 1.
  void publish(funcapprox::ParamVector params);
  // Blocks until version() >= v or the store is closed; returns the latest snapshot.
  Snapshot wait_for(Version v) const;
  void close();

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  Snapshot current_;
  bool closed_ = false;
};

// Shared env-step budget. Workers reserve a whole cycle before collecting
// and refund what a preempted cycle did not use.
class StepBudget {
 public:
  explicit StepBudget(std::uint64_t target, std::uint64_t already_used = 0) : target_(target), used_(already_used) {}

  // Succeeds while fewer than target steps are reserved.
  bool reserve(std::uint64_t n);
  void refund(std::uint64_t n);
  std::uint64_t reserved() const { return used_.load(); }
  std::uint64_t target() const { return target_.load(); }
  // Refuses every further reservation; in-flight work still completes.
  void close() { target_.store(0); }
  // Not thread-safe; for restoring state between runs.
  void reset(std::uint64_t target, std::uint64_t used) {
    target_.store(target);
    used_.store(used);
  }

 private:
  std::atomic<std::uint64_t> target_;
  std::atomic<std::uint64_t> used_;
};

// Sleeps until `deadline` unless `interrupted()` turns true first (polled
// every millisecond); returns false if interrupted.
bool sleep_until_or(std::chrono::steady_clock::time_point deadline, const std::function<bool()>& interrupted);

// All-reduce rendezvous for sync gradient workers. Each active worker
// submits one (possibly empty) contribution per slot and blocks until every
// active worker has submitted or retired. With an `apply` callback the last
// arrival runs it once per slot (centralized update) and everyone receives
// its resulting snapshot.
class SyncReducer {
 public:
  using Contributions = std::vector<std::optional<funcapprox::Gradient>>;
  using Apply = std::function<std::shared_ptr<const funcapprox::ParamVector>(const Contributions&, double progress)>;

  struct Outcome {
    std::shared_ptr<const Contributions> contributions;  // indexed by worker
    std::shared_ptr<const funcapprox::ParamVector> params;  // set when apply is used
    double progress = 0.0;  // progress reported by the lowest-index submitter
  };

  explicit SyncReducer(std::size_t workers, Apply apply = {});

  Outcome submit(std::size_t worker, std::optional<funcapprox::Gradient> g, double progress);
  void retire(std::size_t worker);
  void close();

 private:
  void complete_locked();

  std::mutex mu_;
  std::condition_variable cv_;
  Apply apply_;
  std::vector<bool> active_;
  std::vector<bool> arrived_;
  std::vector<double> progress_;
  std::size_t arrived_count_ = 0;
  Contributions pending_;
  std::uint64_t generation_ = 0;
  Outcome last_;
  bool closed_ = false;
  std::exception_ptr error_;
};

}  // namespace modrl::scheme
