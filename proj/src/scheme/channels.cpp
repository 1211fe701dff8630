#include "modrl/scheme/channels.hpp"

#include <algorithm>
#include <thread>

namespace modrl::scheme {

VersionStore::VersionStore(funcapprox::ParamVector initial)
    : current_(std::make_shared<const funcapprox::ParamVector>(std::move(initial))) {}

VersionStore::Snapshot VersionStore::snapshot() const {
  std::lock_guard lock(mu_);
  return current_;
}

Version VersionStore::version() const {
  std::lock_guard lock(mu_);
  return current_->version;
}

void VersionStore::publish(funcapprox::ParamVector params) {
  auto snap = std::make_shared<const funcapprox::ParamVector>(std::move(params));
  std::lock_guard lock(mu_);
  if (snap->version != current_->version + 1) {
    throw ContractViolation("version store expects version " + std::to_string(current_->version + 1) + ", got " +
                            std::to_string(snap->version));
  }
  current_ = std::move(snap);
  cv_.notify_all();
}

VersionStore::Snapshot VersionStore::wait_for(Version v) const {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return closed_ || current_->version >= v; });
  return current_;
}

void VersionStore::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

bool StepBudget::reserve(std::uint64_t n) {
  auto cur = used_.load();
  while (cur < target_.load()) {
    if (used_.compare_exchange_weak(cur, cur + n)) return true;
  }
  return false;
}

void StepBudget::refund(std::uint64_t n) { used_.fetch_sub(n); }

bool sleep_until_or(std::chrono::steady_clock::time_point deadline, const std::function<bool()>& interrupted) {
  using namespace std::chrono;
  while (true) {
    if (interrupted && interrupted()) return false;
    const auto now = steady_clock::now();
    if (now >= deadline) return true;
    std::this_thread::sleep_for(std::min<steady_clock::duration>(deadline - now, milliseconds(1)));
  }
}

SyncReducer::SyncReducer(std::size_t workers, Apply apply)
    : apply_(std::move(apply)),
      active_(workers, true),
      arrived_(workers, false),
      progress_(workers, 0.0),
      pending_(workers) {}

SyncReducer::Outcome SyncReducer::submit(std::size_t worker, std::optional<funcapprox::Gradient> g, double progress) {
  std::unique_lock lock(mu_);
  if (closed_) throw ChannelClosed();
  if (!active_.at(worker) || arrived_[worker]) throw ContractViolation("reducer: unexpected submission");
  arrived_[worker] = true;
  progress_[worker] = progress;
  pending_[worker] = std::move(g);
  ++arrived_count_;
  const auto gen = generation_;
  const auto active = static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
  if (arrived_count_ == active) {
    complete_locked();
  } else {
    cv_.wait(lock, [&] { return closed_ || generation_ != gen; });
  }
  if (error_) std::rethrow_exception(error_);
  if (generation_ == gen) throw ChannelClosed();
  return last_;
}

void SyncReducer::retire(std::size_t worker) {
  std::lock_guard lock(mu_);
  if (!active_.at(worker)) return;
  active_[worker] = false;
  const auto active = static_cast<std::size_t>(std::count(active_.begin(), active_.end(), true));
  if (arrived_count_ > 0 && arrived_count_ == active) complete_locked();
}

void SyncReducer::close() {
  std::lock_guard lock(mu_);
  closed_ = true;
  cv_.notify_all();
}

void SyncReducer::complete_locked() {
  Outcome out;
  auto contributions = std::make_shared<Contributions>(std::move(pending_));
  for (std::size_t i = 0; i < arrived_.size(); ++i) {
    if (arrived_[i]) {
      out.progress = progress_[i];
      break;
    }
  }
  if (apply_) {
    try {
      out.params = apply_(*contributions, out.progress);
    } catch (...) {
      error_ = std::current_exception();
      closed_ = true;
    }
  }
  out.contributions = std::move(contributions);
  pending_ = Contributions(arrived_.size());
  std::fill(arrived_.begin(), arrived_.end(), false);
  arrived_count_ = 0;
  last_ = std::move(out);
  ++generation_;
  cv_.notify_all();
}

}  // namespace modrl::scheme
