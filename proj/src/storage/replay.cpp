#include "modrl/storage/replay.hpp"

#include <algorithm>
#include <cmath>

#include "modrl/common/errors.hpp"

namespace modrl::storage {

namespace {

void check_entry(const ReplayEntry& e) {
  if (e.obs.empty() || e.obs.size() != e.next_obs.size()) throw ConfigError("replay entry obs/next_obs mismatch");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!std::isfinite(e.reward) || !finite(e.obs) || !finite(e.next_obs) || !finite(e.action)) {
    throw NumericFault("non-finite value in replay entry");
  }
}

void fill_row(Matrix& m, Eigen::Index row, const std::vector<double>& v) {
  for (std::size_t j = 0; j < v.size(); ++j) m(row, static_cast<Eigen::Index>(j)) = v[j];
}

}  // namespace

ReplayBatch make_batch(std::span<const ReplayEntry* const> entries) {
  ReplayBatch b;
  if (entries.empty()) return b;
  const auto n = static_cast<Eigen::Index>(entries.size());
  const auto od = static_cast<Eigen::Index>(entries.front()->obs.size());
  const auto ad = static_cast<Eigen::Index>(entries.front()->action.size());
  b.obs.resize(n, od);
  b.next_obs.resize(n, od);
  b.actions.resize(n, ad);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = *entries[static_cast<std::size_t>(i)];
    fill_row(b.obs, i, e.obs);
    fill_row(b.next_obs, i, e.next_obs);
    fill_row(b.actions, i, e.action);
    b.rewards.push_back(e.reward);
    b.dones.push_back(e.done ? 1 : 0);
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
}

void ReplayBuffer::insert(ReplayEntry entry) {
  check_entry(entry);
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back(std::move(entry));
}

void ReplayBuffer::insert(std::span<const ReplayEntry> entries) {
  for (const auto& e : entries) insert(e);
}

std::optional<std::vector<std::size_t>> ReplayBuffer::sample_indices(std::size_t batch_size) {
  if (batch_size == 0 || entries_.size() < batch_size) return std::nullopt;
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = rng_.index(entries_.size());
  return idx;
}

std::optional<ReplayBatch> ReplayBuffer::sample(std::size_t batch_size) {
  auto idx = sample_indices(batch_size);
  if (!idx) return std::nullopt;
  std::vector<const ReplayEntry*> ptrs;
  ptrs.reserve(idx->size());
  for (auto i : *idx) ptrs.push_back(&entries_[i]);
  return make_batch(ptrs);
}

void write_entry(ByteWriter& w, const ReplayEntry& e) {
  w.f64s(e.obs);
  w.f64s(e.action);
  w.f64(e.reward);
  w.f64s(e.next_obs);
  w.u8(e.done ? 1 : 0);
  w.f64s(e.goal);
  w.f64s(e.achieved_goal);
}

ReplayEntry read_entry(ByteReader& r) {
  ReplayEntry e;
  e.obs = r.f64s();
  e.action = r.f64s();
  e.reward = r.f64();
  e.next_obs = r.f64s();
  e.done = r.u8() != 0;
  e.goal = r.f64s();
  e.achieved_goal = r.f64s();
  return e;
}

void ReplayBuffer::save_state(ByteWriter& w) const {
  w.u64(capacity_);
  w.str(rng_.serialize());
  w.u64(entries_.size());
  for (const auto& e : entries_) write_entry(w, e);
}

void ReplayBuffer::load_state(ByteReader& r) {
  const auto cap = r.u64();
  Rng rng;
  rng.deserialize(r.str());
  const auto n = r.u64();
  std::deque<ReplayEntry> entries;
  for (std::uint64_t i = 0; i < n; ++i) entries.push_back(read_entry(r));
  capacity_ = cap;
  rng_ = rng;
  entries_ = std::move(entries);
}

std::string to_string(HerStrategy s) { return s == HerStrategy::kFinal ? "final" : "future"; }

HerStrategy her_strategy_from_string(const std::string& name) {
  if (name == "final") return HerStrategy::kFinal;
  if (name == "future") return HerStrategy::kFuture;
  throw ConfigError("unknown HER strategy '" + name + "' (expected final or future)");
}

std::vector<ReplayEntry> her_relabel(std::span<const ReplayEntry> episode, std::size_t k, HerStrategy strategy,
                                     const envs::GoalSpace& gs, Rng& rng) {
  std::vector<ReplayEntry> out;
  out.reserve(episode.size() * (1 + k));
  if (k > 0) {
    for (const auto& e : episode) {
      if (!e.has_goal()) throw ConfigError("HER needs entries with goal and achieved_goal");
    }
  }
  const std::size_t T = episode.size();
  for (std::size_t t = 0; t < T; ++t) {
    out.push_back(episode[t]);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t src = strategy == HerStrategy::kFinal ? T - 1 : t + rng.index(T - t);
      const auto& goal = episode[src].achieved_goal;
      ReplayEntry c = episode[t];
      c.goal = goal;
      for (std::size_t g = 0; g < gs.goal_dim; ++g) {
        c.obs[gs.goal_offset + g] = goal[g];
        c.next_obs[gs.goal_offset + g] = goal[g];
      }
      c.reward = gs.reward(c.achieved_goal, c.goal);
      c.done = c.reward == gs.success_reward;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace modrl::storage
