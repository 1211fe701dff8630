#include "modrl/scheme/agent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "modrl/algos/schedule.hpp"
#include "modrl/common/errors.hpp"
#include "modrl/funcapprox/checkpoint.hpp"

namespace modrl::scheme {

using funcapprox::ParamVector;

void AgentConfig::validate() const {
  require(num_envs >= 1, "environment.num_envs must be >= 1");
  algo.validate();
  storage.validate();
  const bool algo_on = algos::is_on_policy(algo.kind);
  const bool storage_on = storage::is_on_policy(storage.kind);
  if (algo_on != storage_on) {
    throw ConfigError("algo '" + algos::to_string(algo.kind) + "' is " + (algo_on ? "on-policy" : "off-policy") +
                      " but storage '" + storage::to_string(storage.kind) + "' is " +
                      (storage_on ? "on-policy" : "off-policy") + "; components must come from the same family");
  }
}

std::uint64_t collection_env_seed(std::uint64_t seed, std::size_t worker, std::size_t num_envs) {
  return seed + static_cast<std::uint64_t>(worker * num_envs);
}

CollectedData Collector::collect(const CycleContext& ctx) {
  begin(ctx);
  for (std::size_t t = 0; t < steps_per_cycle(); ++t) step();
  return finish();
}

namespace {

Matrix clip_to_space(const Matrix& actions, const envs::ActionSpace& space) {
  if (space.is_discrete()) return actions;
  Matrix out = actions;
  for (Eigen::Index b = 0; b < out.rows(); ++b) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const auto k = static_cast<std::size_t>(j);
      out(b, j) = std::clamp(out(b, j), space.low[k], space.high[k]);
    }
  }
  return out;
}

double info_scalar(const envs::Info& info, const char* key, double fallback) {
  auto it = info.find(key);
  return it == info.end() || it->second.empty() ? fallback : it->second.front();
}

void set_row(Matrix& m, Eigen::Index row, std::span<const double> v) {
  for (std::size_t j = 0; j < v.size(); ++j) m(row, static_cast<Eigen::Index>(j)) = v[j];
}

std::vector<double> row_vec(const Matrix& m, Eigen::Index row) {
  auto s = row_span(m, row);
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------- on-policy

class OnPolicyCollector final : public Collector {
 public:
  OnPolicyCollector(const AgentFactories& f, std::size_t worker)
      : env_(f.make_env(collection_env_seed(f.config().seed, worker, f.config().num_envs))),
        actor_(actors::create_factory(f.on_policy_actor_config(), f.config().seed)()),
        rng_(derive_seed(f.config().seed, kCollectionStream, worker)),
        gamma_(f.config().algo.gamma),
        horizon_(f.config().algo.num_steps),
        episode_return_(env_->num_envs(), 0.0) {}

  void set_params(const ParamVector& p) override { actor_.set_params(p); }
  const ParamVector& params() const override { return actor_.params(); }
  std::size_t steps_per_cycle() const override { return horizon_; }
  std::size_t num_envs() const override { return env_->num_envs(); }
  std::size_t steps_done() const override { return t_; }

  void begin(const CycleContext&) override {
    const auto E = static_cast<Eigen::Index>(num_envs());
    const auto n = static_cast<Eigen::Index>(horizon_) * E;
    t_ = 0;
    data_ = CollectedData{};
    ro_ = storage::Rollout{};
    ro_.num_envs = num_envs();
    ro_.observations.resize(n, static_cast<Eigen::Index>(env_->observation_dim()));
    ro_.actions.resize(n, static_cast<Eigen::Index>(env_->action_space().width()));
    ro_.collected_with_version = actor_.params().version;
  }

  void step() override {
    const Matrix obs = env_->observations();
    const auto ab = actor_.act(obs, false, rng_);
    auto res = env_->step(clip_to_space(ab.actions, env_->action_space()));
    const std::size_t E = num_envs();
    for (std::size_t e = 0; e < E; ++e) {
      const auto i = static_cast<Eigen::Index>(t_ * E + e);
      const auto row = static_cast<Eigen::Index>(e);
      ro_.observations.row(i) = obs.row(row);
      ro_.actions.row(i) = ab.actions.row(row);
      double r = res.rewards[e];
      episode_return_[e] += r;
      if (res.dones[e]) {
        const auto& info = res.infos[e];
        if (info.contains(envs::kInfoTruncated)) {
          const auto& term = info.at(envs::kInfoTerminalObservation);
          Matrix m(1, static_cast<Eigen::Index>(term.size()));
          set_row(m, 0, term);
          r += gamma_ * actor_.values(m)[0];
        }
        data_.episode_rewards.push_back(episode_return_[e]);
        if (info.contains(envs::kInfoSuccess)) data_.episode_successes.push_back(info_scalar(info, envs::kInfoSuccess, 0));
        episode_return_[e] = 0.0;
      }
      ro_.rewards.push_back(r);
      ro_.dones.push_back(res.dones[e]);
      ro_.value_estimates.push_back(ab.values[e]);
      ro_.behavior_log_probs.push_back(ab.log_probs[e]);
    }
    ++t_;
  }

  CollectedData finish() override {
    const auto n = static_cast<Eigen::Index>(t_ * num_envs());
    ro_.num_steps = t_;
    ro_.observations.conservativeResize(n, Eigen::NoChange);
    ro_.actions.conservativeResize(n, Eigen::NoChange);
    ro_.bootstrap_values = actor_.values(env_->observations());
    data_.preempted = t_ < horizon_;
    data_.env_steps = static_cast<std::size_t>(n);
    data_.collected_with_version = ro_.collected_with_version;
    data_.rollout = std::move(ro_);
    return std::move(data_);
  }

  void save_state(ByteWriter& w) const override {
    env_->save_state(w);
    funcapprox::write_params(w, actor_.params());
    w.str(rng_.serialize());
    w.f64s(episode_return_);
  }

  void load_state(ByteReader& r) override {
    env_->load_state(r);
    actor_.set_params(funcapprox::read_params(r));
    rng_.deserialize(r.str());
    episode_return_ = r.f64s();
  }

 private:
  std::unique_ptr<envs::VecEnv> env_;
  actors::OnPolicyActor actor_;
  Rng rng_;
  double gamma_;
  std::size_t horizon_;
  std::vector<double> episode_return_;
  std::size_t t_ = 0;
  storage::Rollout ro_;
  CollectedData data_;
};

class OnPolicyGradientComputer final : public GradientComputer {
 public:
  OnPolicyGradientComputer(const AgentFactories& f, std::size_t worker)
      : cfg_(f.config().algo),
        storage_(f.config().storage),
        actor_(actors::create_factory(f.on_policy_actor_config(), f.config().seed)()),
        rng_(derive_seed(f.config().seed, kGradientStream, worker)) {
    if (cfg_.kind == algos::AlgoKind::kA2c) cfg_.num_epochs = 1;
  }

  void set_params(const ParamVector& p) override { actor_.set_params(p); }
  const ParamVector& params() const override { return actor_.params(); }
  std::size_t gradients_per_round() const override { return cfg_.num_epochs * cfg_.num_mini_batch; }

  void ingest(std::vector<CollectedData> data, const CycleContext&) override {
    std::vector<storage::Rollout> rollouts;
    bool any = false;
    for (auto& d : data) {
      if (!d.rollout) continue;
      data_version_ = any ? std::min(data_version_, d.collected_with_version) : d.collected_with_version;
      any = true;
      rollouts.push_back(process(std::move(*d.rollout)));
    }
    produced_ = 0;
    const auto mbs = storage::minibatch_epochs(rollouts, cfg_.num_epochs, cfg_.num_mini_batch, rng_.next_u64());
    pending_.assign(mbs.begin(), mbs.end());
  }

  algos::StepOutput next_gradient(const CycleContext& ctx) override {
    if (pending_.empty()) return {};
    auto mb = std::move(pending_.front());
    pending_.pop_front();
    auto cfg = cfg_;
    cfg.clip_param = algos::decay_schedule(cfg_.clip_param, std::clamp(ctx.progress, 0.0, 1.0), cfg_.clip_decay);
    auto out = cfg.kind == algos::AlgoKind::kPpo ? algos::ppo_step(mb, actor_, cfg) : algos::a2c_step(mb, actor_, cfg);
    out.gradient.data_collected_with_version =
        std::min<Version>(data_version_ + produced_, out.gradient.computed_with_version);
    ++produced_;
    return out;
  }

  void save_state(ByteWriter& w) const override {
    if (!pending_.empty()) throw ContractViolation("cannot snapshot a gradient worker mid-round");
    funcapprox::write_params(w, actor_.params());
    w.str(rng_.serialize());
    w.u64(data_version_);
    w.u64(produced_);
  }

  void load_state(ByteReader& r) override {
    actor_.set_params(funcapprox::read_params(r));
    rng_.deserialize(r.str());
    data_version_ = r.u64();
    produced_ = r.u64();
    pending_.clear();
  }

 private:
  storage::Rollout process(storage::Rollout ro) const {
    switch (storage_.kind) {
      case storage::StorageKind::kVanilla:
        return storage::compute_returns_vanilla(std::move(ro), cfg_.gamma);
      case storage::StorageKind::kGae:
        return storage::compute_gae(std::move(ro), cfg_.gamma, storage_.gae_lambda);
      case storage::StorageKind::kVtrace: {
        const auto ev = actor_.evaluate_actions(ro.observations, ro.actions);
        return storage::compute_vtrace(std::move(ro), ev.log_probs, cfg_.gamma, storage_.rho_bar, storage_.c_bar);
      }
      default:
        throw ConfigError("on-policy algo needs an on-policy storage");
    }
  }

  algos::AlgoConfig cfg_;
  storage::StorageConfig storage_;
  actors::OnPolicyActor actor_;
  Rng rng_;
  std::deque<storage::MiniBatch> pending_;
  Version data_version_ = 0;
  std::uint64_t produced_ = 0;
};

// ---------------------------------------------------------------- off-policy

class OffPolicyCollector final : public Collector {
 public:
  OffPolicyCollector(const AgentFactories& f, std::size_t worker)
      : cfg_(f.config().algo),
        her_(f.config().storage.kind == storage::StorageKind::kHer),
        env_(f.make_env(collection_env_seed(f.config().seed, worker, f.config().num_envs))),
        actor_(actors::create_factory(f.off_policy_actor_config(), f.config().seed)()),
        rng_(derive_seed(f.config().seed, kCollectionStream, worker)),
        goal_space_(env_->goal_space()),
        episode_return_(env_->num_envs(), 0.0),
        partial_(env_->num_envs()) {
    if (her_ && !goal_space_) throw ConfigError("storage 'her' needs a goal-conditioned environment");
    horizon_ = (cfg_.update_every + env_->num_envs() - 1) / env_->num_envs();
  }

  void set_params(const ParamVector& p) override { actor_.set_params(p); }
  const ParamVector& params() const override { return actor_.params(); }
  std::size_t steps_per_cycle() const override { return horizon_; }
  std::size_t num_envs() const override { return env_->num_envs(); }
  std::size_t steps_done() const override { return t_; }

  void begin(const CycleContext& ctx) override {
    ctx_ = ctx;
    t_ = 0;
    data_ = CollectedData{};
    data_.collected_with_version = actor_.params().version;
  }

  void step() override {
    const Matrix obs = env_->observations();
    const std::size_t E = num_envs();
    const auto& space = env_->action_space();
    Matrix stored(static_cast<Eigen::Index>(E), static_cast<Eigen::Index>(space.width()));
    Matrix env_actions = stored;
    if (actor_.mode() == actors::OffPolicyMode::kDdqn) {
      const double eps =
          algos::epsilon_schedule(cfg_.epsilon_start, cfg_.epsilon_end, cfg_.epsilon_fraction, ctx_.progress);
      const auto greedy = actor_.greedy_actions(obs);
      for (std::size_t e = 0; e < E; ++e) {
        const auto a = rng_.uniform() < eps ? rng_.index(space.n) : greedy[e];
        stored(static_cast<Eigen::Index>(e), 0) = static_cast<double>(a);
      }
      env_actions = stored;
    } else {
      if (ctx_.global_env_steps + t_ * E < cfg_.start_steps) {
        for (Eigen::Index i = 0; i < stored.size(); ++i) stored.data()[i] = rng_.uniform(-1.0, 1.0);
      } else {
        stored = actor_.sample_squashed(obs, false, rng_).actions;
      }
      for (std::size_t e = 0; e < E; ++e) {
        set_row(env_actions, static_cast<Eigen::Index>(e),
                actors::scale_action(row_span(stored, static_cast<Eigen::Index>(e)), space));
      }
    }
    auto res = env_->step(env_actions);
    for (std::size_t e = 0; e < E; ++e) {
      const auto row = static_cast<Eigen::Index>(e);
      const auto& info = res.infos[e];
      storage::ReplayEntry entry;
      entry.obs = row_vec(obs, row);
      entry.action = row_vec(stored, row);
      entry.reward = res.rewards[e];
      entry.next_obs = res.dones[e] ? info.at(envs::kInfoTerminalObservation) : row_vec(res.observations, row);
      entry.done = res.dones[e] && !info.contains(envs::kInfoTruncated);
      if (goal_space_) {
        const auto off = static_cast<std::ptrdiff_t>(goal_space_->goal_offset);
        const auto dim = static_cast<std::ptrdiff_t>(goal_space_->goal_dim);
        entry.goal.assign(entry.obs.begin() + off, entry.obs.begin() + off + dim);
        if (info.contains(envs::kInfoAchievedGoal)) entry.achieved_goal = info.at(envs::kInfoAchievedGoal);
      }
      episode_return_[e] += entry.reward;
      if (her_) {
        partial_[e].push_back(std::move(entry));
      } else {
        data_.transitions.push_back(std::move(entry));
      }
      if (res.dones[e]) {
        data_.episode_rewards.push_back(episode_return_[e]);
        if (info.contains(envs::kInfoSuccess)) data_.episode_successes.push_back(info_scalar(info, envs::kInfoSuccess, 0));
        episode_return_[e] = 0.0;
        if (her_) {
          data_.episodes.push_back(std::move(partial_[e]));
          partial_[e].clear();
        }
      }
    }
    ++t_;
  }

  CollectedData finish() override {
    data_.env_steps = t_ * num_envs();
    data_.preempted = t_ < horizon_;
    return std::move(data_);
  }

  void save_state(ByteWriter& w) const override {
    env_->save_state(w);
    funcapprox::write_params(w, actor_.params());
    w.str(rng_.serialize());
    w.f64s(episode_return_);
    for (const auto& ep : partial_) {
      w.u64(ep.size());
      for (const auto& e : ep) storage::write_entry(w, e);
    }
  }

  void load_state(ByteReader& r) override {
    env_->load_state(r);
    actor_.set_params(funcapprox::read_params(r));
    rng_.deserialize(r.str());
    episode_return_ = r.f64s();
    for (auto& ep : partial_) {
      ep.clear();
      const auto n = r.u64();
      for (std::uint64_t i = 0; i < n; ++i) ep.push_back(storage::read_entry(r));
    }
  }

 private:
  algos::AlgoConfig cfg_;
  bool her_;
  std::unique_ptr<envs::VecEnv> env_;
  actors::OffPolicyActor actor_;
  Rng rng_;
  std::optional<envs::GoalSpace> goal_space_;
  std::vector<double> episode_return_;
  std::vector<std::vector<storage::ReplayEntry>> partial_;
  std::size_t horizon_ = 1;
  std::size_t t_ = 0;
  CycleContext ctx_;
  CollectedData data_;
};

class OffPolicyGradientComputer final : public GradientComputer {
 public:
  OffPolicyGradientComputer(const AgentFactories& f, std::size_t worker)
      : cfg_(f.config().algo),
        storage_(f.config().storage),
        actor_(actors::create_factory(f.off_policy_actor_config(), f.config().seed)()),
        buffer_(f.config().storage.capacity, derive_seed(f.config().seed, kGradientStream + 1, worker)),
        rng_(derive_seed(f.config().seed, kGradientStream, worker)) {
    if (storage_.kind == storage::StorageKind::kHer) {
      auto env = f.make_env(f.config().seed);
      goal_space_ = env->goal_space();
      if (!goal_space_) throw ConfigError("storage 'her' needs a goal-conditioned environment");
    }
  }

  void set_params(const ParamVector& p) override { actor_.set_params(p); }
  const ParamVector& params() const override { return actor_.params(); }
  std::size_t gradients_per_round() const override { return cfg_.num_updates; }

  void ingest(std::vector<CollectedData> data, const CycleContext&) override {
    bool any = false;
    for (auto& d : data) {
      if (d.retired) continue;
      data_version_ = any ? std::min(data_version_, d.collected_with_version) : d.collected_with_version;
      any = true;
      buffer_.insert(d.transitions);
      for (const auto& ep : d.episodes) {
        if (storage_.kind == storage::StorageKind::kHer) {
          buffer_.insert(storage::her_relabel(ep, storage_.her_k, storage_.her_strategy, *goal_space_, rng_));
        } else {
          buffer_.insert(ep);
        }
      }
    }
    produced_ = 0;
  }

  algos::StepOutput next_gradient(const CycleContext& ctx) override {
    if (ctx.global_env_steps < cfg_.start_steps) return {};
    auto batch = buffer_.sample(cfg_.batch_size);
    if (!batch) return {};
    algos::StepOutput out;
    if (cfg_.kind == algos::AlgoKind::kDdqn) {
      out = algos::ddqn_step(*batch, actor_, cfg_);
    } else {
      const auto noise = algos::draw_sac_noise(batch->size(), actor_.action_dim(), rng_);
      out = algos::sac_step(*batch, actor_, cfg_, noise);
    }
    out.gradient.data_collected_with_version =
        std::min<Version>(data_version_ + produced_, out.gradient.computed_with_version);
    ++produced_;
    return out;
  }

  void save_state(ByteWriter& w) const override {
    funcapprox::write_params(w, actor_.params());
    w.str(rng_.serialize());
    buffer_.save_state(w);
    w.u64(data_version_);
    w.u64(produced_);
  }

  void load_state(ByteReader& r) override {
    actor_.set_params(funcapprox::read_params(r));
    rng_.deserialize(r.str());
    buffer_.load_state(r);
    data_version_ = r.u64();
    produced_ = r.u64();
  }

 private:
  algos::AlgoConfig cfg_;
  storage::StorageConfig storage_;
  actors::OffPolicyActor actor_;
  storage::ReplayBuffer buffer_;
  Rng rng_;
  std::optional<envs::GoalSpace> goal_space_;
  Version data_version_ = 0;
  std::uint64_t produced_ = 0;
};

}  // namespace

// ---------------------------------------------------------------- factories

AgentFactories::AgentFactories(AgentConfig config) : config_(std::move(config)) {
  config_.validate();
  auto env = make_env(config_.seed);
  obs_dim_ = env->observation_dim();
  action_space_ = env->action_space();
  goal_space_ = env->goal_space();
  switch (config_.algo.kind) {
    case algos::AlgoKind::kDdqn:
      if (!action_space_.is_discrete()) throw ConfigError("algo 'ddqn' needs a discrete action space");
      break;
    case algos::AlgoKind::kSac:
      if (action_space_.is_discrete()) throw ConfigError("algo 'sac' needs a continuous action space");
      break;
    default:
      break;
  }
  if (config_.storage.kind == storage::StorageKind::kHer && !goal_space_) {
    throw ConfigError("storage 'her' needs a goal-conditioned environment (bitflip)");
  }
}

std::unique_ptr<envs::VecEnv> AgentFactories::make_env(std::uint64_t seed) const {
  auto spec = config_.env;
  spec.seed = seed;
  return envs::vecenv_make(spec, config_.num_envs);
}

actors::OnPolicyActorConfig AgentFactories::on_policy_actor_config() const {
  actors::OnPolicyActorConfig c;
  c.obs_dim = obs_dim_;
  c.action_space = action_space_;
  c.hidden = config_.hidden;
  c.activation = config_.activation;
  c.initial_log_std = config_.initial_log_std;
  return c;
}

actors::OffPolicyActorConfig AgentFactories::off_policy_actor_config() const {
  actors::OffPolicyActorConfig c;
  c.mode = config_.algo.kind == algos::AlgoKind::kDdqn ? actors::OffPolicyMode::kDdqn : actors::OffPolicyMode::kSac;
  c.obs_dim = obs_dim_;
  c.action_space = action_space_;
  c.hidden = config_.hidden;
  c.activation = config_.activation;
  c.initial_alpha = config_.algo.initial_alpha;
  return c;
}

ParamVector AgentFactories::initial_params() const {
  if (on_policy()) return actors::create_factory(on_policy_actor_config(), config_.seed)().params();
  return actors::create_factory(off_policy_actor_config(), config_.seed)().params();
}

std::vector<funcapprox::MlpSpec> AgentFactories::networks() const {
  if (on_policy()) {
    const auto a = actors::create_factory(on_policy_actor_config(), config_.seed)();
    return {a.policy_spec(), a.value_spec()};
  }
  const auto a = actors::create_factory(off_policy_actor_config(), config_.seed)();
  if (a.mode() == actors::OffPolicyMode::kDdqn) return {a.q_spec(), a.q_spec()};
  return {a.policy_spec(), a.q_spec(), a.q_spec(), a.q_spec(), a.q_spec()};
}

algos::Updater AgentFactories::make_updater() const {
  if (on_policy()) {
    const auto a = actors::create_factory(on_policy_actor_config(), config_.seed)();
    return algos::Updater(config_.algo, algos::layout_for(a), a.params().size());
  }
  const auto a = actors::create_factory(off_policy_actor_config(), config_.seed)();
  return algos::Updater(config_.algo, algos::layout_for(a), a.params().size());
}

std::unique_ptr<Collector> AgentFactories::make_collector(std::size_t worker) const {
  if (on_policy()) return std::make_unique<OnPolicyCollector>(*this, worker);
  return std::make_unique<OffPolicyCollector>(*this, worker);
}

std::unique_ptr<GradientComputer> AgentFactories::make_gradient_computer(std::size_t worker) const {
  if (on_policy()) return std::make_unique<OnPolicyGradientComputer>(*this, worker);
  return std::make_unique<OffPolicyGradientComputer>(*this, worker);
}

Policy AgentFactories::make_policy(const ParamVector& params) const {
  const auto space = action_space_;
  if (on_policy()) {
    auto actor = std::make_shared<actors::OnPolicyActor>(on_policy_actor_config(), params);
    return [actor, space](const Matrix& obs) {
      Rng unused(0);
      return clip_to_space(actor->act(obs, true, unused).actions, space);
    };
  }
  auto actor = std::make_shared<actors::OffPolicyActor>(off_policy_actor_config(), params);
  if (actor->mode() == actors::OffPolicyMode::kDdqn) {
    return [actor](const Matrix& obs) {
      const auto g = actor->greedy_actions(obs);
      Matrix out(obs.rows(), 1);
      for (Eigen::Index b = 0; b < obs.rows(); ++b) out(b, 0) = static_cast<double>(g[static_cast<std::size_t>(b)]);
      return out;
    };
  }
  return [actor, space](const Matrix& obs) {
    Rng unused(0);
    const auto s = actor->sample_squashed(obs, true, unused);
    Matrix out(s.actions.rows(), s.actions.cols());
    for (Eigen::Index b = 0; b < out.rows(); ++b) set_row(out, b, actors::scale_action(row_span(s.actions, b), space));
    return out;
  };
}

}  // namespace modrl::scheme
