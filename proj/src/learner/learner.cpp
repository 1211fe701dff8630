#include "modrl/learner/learner.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "modrl/common/errors.hpp"

namespace modrl::learner {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

constexpr std::uint64_t kCheckpointVersion = 1;

}  // namespace

std::string to_string(RuntimeMode mode) { return mode == RuntimeMode::kThreaded ? "threaded" : "deterministic"; }

RuntimeMode runtime_mode_from_string(const std::string& name) {
  if (name == "deterministic") return RuntimeMode::kDeterministic;
  if (name == "threaded") return RuntimeMode::kThreaded;
  throw ConfigError("learner.runtime: unknown mode '" + name + "' (expected deterministic or threaded)");
}

void LearnerConfig::validate() const {
  require(log_interval_steps > 0, "learner.log_interval_steps must be positive");
  if (target_steps > 0) {
    require(log_interval_steps <= target_steps, "learner.log_interval_steps must not exceed target_steps");
    if (checkpoint_interval_steps) {
      require(*checkpoint_interval_steps > 0, "learner.checkpoint_interval_steps must be positive");
      require(*checkpoint_interval_steps <= target_steps,
              "learner.checkpoint_interval_steps must not exceed target_steps");
    }
  }
}

std::optional<double> measure_fps(std::uint64_t steps, double seconds) {
  if (steps == 0 || !(seconds > 0.0)) return std::nullopt;
  return static_cast<double>(steps) / seconds;
}

FpsMeter::FpsMeter(std::uint64_t steps, double time)
    : start_steps_(steps), last_steps_(steps), start_time_(time), last_time_(time) {}

std::optional<double> FpsMeter::window(std::uint64_t steps, double time) {
  require(time >= last_time_, "FpsMeter: clock went backwards");
  require(steps >= last_steps_, "FpsMeter: step counter went backwards");
  auto fps = measure_fps(steps - last_steps_, time - last_time_);
  last_steps_ = steps;
  last_time_ = time;
  return fps;
}

std::optional<double> FpsMeter::cumulative(std::uint64_t steps, double time) const {
  return measure_fps(steps - start_steps_, time - start_time_);
}

std::vector<std::string> loss_columns(algos::AlgoKind kind) {
  switch (kind) {
    case algos::AlgoKind::kPpo:
      return {"total_loss", "policy_loss", "value_loss", "entropy", "clip_fraction"};
    case algos::AlgoKind::kA2c:
      return {"total_loss", "policy_loss", "value_loss", "entropy"};
    case algos::AlgoKind::kDdqn:
      return {"q_loss"};
    case algos::AlgoKind::kSac:
      return {"q_loss", "policy_loss", "alpha_loss", "alpha"};
  }
  return {};
}

std::vector<std::string> log_header(algos::AlgoKind kind) {
  std::vector<std::string> h = {"wall_time", "env_steps",  "updates",   "fps",       "reward_mean",
                                "reward_min", "reward_max", "policy_lag", "grad_async"};
  for (auto& c : loss_columns(kind)) h.push_back(c);
  return h;
}

std::string format_record(const TrainRecord& r, algos::AlgoKind kind) {
  std::string s = num(r.wall_time) + "," + std::to_string(r.env_steps) + "," + std::to_string(r.updates) + "," +
                  opt(r.fps) + "," + opt(r.reward_mean) + "," + opt(r.reward_min) + "," + opt(r.reward_max) + "," +
                  num(r.policy_lag) + "," + num(r.grad_async);
  for (const auto& c : loss_columns(kind)) {
    s += ",";
    if (!r.loss) continue;
    const auto& l = *r.loss;
    if (c == "total_loss") s += num(l.total_loss);
    else if (c == "policy_loss") s += num(l.policy_loss);
    else if (c == "value_loss") s += num(l.value_loss);
    else if (c == "entropy") s += num(l.entropy);
    else if (c == "clip_fraction") s += num(l.clip_fraction);
    else if (c == "q_loss") s += num(l.q_loss);
    else if (c == "alpha_loss") s += num(l.alpha_loss);
    else if (c == "alpha") s += num(l.alpha);
  }
  return s;
}

std::vector<std::uint64_t> eval_seeds(std::uint64_t seed, std::size_t count) {
  std::vector<std::uint64_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = derive_seed(seed, kEvalSeedOffset, i);
  return out;
}

EvalStats evaluate(const scheme::Policy& policy, const envs::EnvSpec& spec, std::span<const std::uint64_t> seeds,
                   std::size_t attempts) {
  require(!seeds.empty() && attempts >= 1, "evaluate: need at least one episode");
  EvalStats st;
  for (auto seed : seeds) {
    auto s = spec;
    s.seed = seed;
    auto env = envs::env_make(s);
    for (std::size_t a = 0; a < attempts; ++a) {
      auto obs = env->reset();
      double total = 0.0;
      double success = 0.0;
      while (true) {
        Matrix o(1, static_cast<Eigen::Index>(obs.size()));
        for (std::size_t j = 0; j < obs.size(); ++j) o(0, static_cast<Eigen::Index>(j)) = obs[j];
        const Matrix act = policy(o);
        std::vector<double> action(act.data(), act.data() + act.size());
        auto res = env->step(action);
        total += res.reward;
        if (auto it = res.info.find(envs::kInfoSuccess); it != res.info.end() && !it->second.empty()) {
          success = it->second.front();
        }
        if (res.done) break;
        obs = std::move(res.observation);
      }
      st.scores.push_back(total);
      st.successes.push_back(success);
    }
  }
  const double n = static_cast<double>(st.scores.size());
  st.mean = std::accumulate(st.scores.begin(), st.scores.end(), 0.0) / n;
  st.min = *std::min_element(st.scores.begin(), st.scores.end());
  st.max = *std::max_element(st.scores.begin(), st.scores.end());
  st.success_rate = std::accumulate(st.successes.begin(), st.successes.end(), 0.0) / n;
  return st;
}

CheckpointInfo read_checkpoint(const std::filesystem::path& path) {
  const auto sections = decode_container(read_file(path));
  auto section = [&](const char* name) -> const std::vector<std::uint8_t>& {
    auto it = sections.find(name);
    if (it == sections.end()) throw IntegrityError(std::string("checkpoint: missing section '") + name + "'");
    return it->second;
  };
  CheckpointInfo info;
  info.model = funcapprox::decode_model(section("model"));
  ByteReader r(section("progress"));
  const auto version = r.u64();
  if (version != kCheckpointVersion) throw IntegrityError("checkpoint: unsupported version " + std::to_string(version));
  info.env_steps = r.u64();
  info.updates = r.u64();
  info.config = r.str();
  info.has_runtime_state = sections.contains("runtime");
  return info;
}

struct Learner::LogState {
  std::ofstream log;
  std::ofstream episodes;
  Clock::time_point t0;
  FpsMeter fps;
  std::uint64_t next_log = 0;
  std::uint64_t last_logged = 0;
  bool any_logged = false;
  TrainSummary summary;
};

Learner::Learner(scheme::Topology& topo, LearnerConfig cfg, scheme::TaskDelays delays)
    : topo_(topo), cfg_(std::move(cfg)), delays_(std::move(delays)) {
  cfg_.validate();
  if (cfg_.runtime == RuntimeMode::kDeterministic) {
    det_ = std::make_unique<scheme::DeterministicRuntime>(topo_, cfg_.target_steps, sink_);
  }
}

bool Learner::done() const {
  if (det_) return det_->done();
  return sink_.env_steps() >= cfg_.target_steps;
}

funcapprox::ParamVector Learner::params() const {
  if (det_) return det_->params();
  if (threaded_) return threaded_->params();
  return topo_.update.params;
}

funcapprox::ModelCheckpoint Learner::model() const {
  funcapprox::ModelCheckpoint m;
  m.networks = topo_.factories->networks();
  if (det_) {
    m.params = det_->params();
    m.optimizer = det_->updater().state();
  } else if (threaded_) {
    threaded_->with_update_state([&](const funcapprox::ParamVector& p, const algos::Updater& u) {
      m.params = p;
      m.optimizer = u.state();
    });
  } else {
    m.params = topo_.update.params;
    const auto& u = topo_.update.updater ? *topo_.update.updater : *topo_.gradient.front().updater;
    m.optimizer = u.state();
  }
  return m;
}

std::vector<std::uint8_t> Learner::encode_checkpoint() const {
  SectionMap sections;
  sections["model"] = funcapprox::encode_model(model());
  ByteWriter p;
  p.u64(kCheckpointVersion);
  p.u64(det_ ? det_->env_steps() : sink_.env_steps());
  p.u64(sink_.updates());
  p.str(config_snapshot_);
  sections["progress"] = p.take();
  if (det_) {
    ByteWriter w;
    det_->save_state(w);
    sections["runtime"] = w.take();
  }
  return encode_container(sections);
}

void Learner::save_checkpoint(const std::filesystem::path& path) const { write_file_atomic(path, encode_checkpoint()); }

void Learner::load_checkpoint(const std::filesystem::path& path) {
  if (!det_) throw ConfigError("resuming from a checkpoint requires learner.runtime = deterministic");
  const auto sections = decode_container(read_file(path));
  const auto info = read_checkpoint(path);
  auto it = sections.find("runtime");
  if (it == sections.end()) throw ConfigError("checkpoint has no runtime state; it cannot be resumed");
  const auto expected = topo_.factories->networks();
  if (info.model.networks != expected) throw ConfigError("checkpoint networks do not match the configured agent");
  // Decode into a scratch topology first so a bad file leaves this one untouched.
  {
    auto scratch = scheme::spawn(topo_.scheme, topo_.factories);
    scheme::MetricsSink scratch_sink;
    scheme::DeterministicRuntime probe(scratch, cfg_.target_steps, scratch_sink);
    ByteReader r(it->second);
    probe.load_state(r);
  }
  ByteReader r(it->second);
  det_->load_state(r);
  det_->set_target(cfg_.target_steps);
  sink_.restore(info.env_steps, info.updates);
  resumed_ = true;
}

void Learner::emit(LogState& st, const scheme::MetricsWindow& w, bool final) {
  const double t = seconds_since(st.t0);
  if (st.any_logged && w.env_steps == st.last_logged) return;
  if (!final && w.env_steps < st.next_log) return;
  TrainRecord rec;
  rec.wall_time = t;
  rec.env_steps = w.env_steps;
  rec.updates = w.updates;
  rec.fps = st.fps.window(w.env_steps, t);
  if (!w.episode_rewards.empty()) {
    const auto& e = w.episode_rewards;
    rec.reward_mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    rec.reward_min = *std::min_element(e.begin(), e.end());
    rec.reward_max = *std::max_element(e.begin(), e.end());
  }
  const auto lag = scheme::lag_metrics(w.lags);
  rec.policy_lag = lag.policy_lag;
  rec.grad_async = lag.grad_async;
  rec.dropped_gradients = w.dropped_gradients;
  if (w.loss_count) rec.loss = w.loss;
  const auto kind = topo_.factories->config().algo.kind;
  if (st.log.is_open()) st.log << format_record(rec, kind) << "\n" << std::flush;
  if (st.episodes.is_open()) {
    for (std::size_t i = 0; i < w.episode_rewards.size(); ++i) {
      st.episodes << w.env_steps << "," << num(w.episode_rewards[i]) << ",";
      if (i < w.episode_successes.size()) st.episodes << num(w.episode_successes[i]);
      st.episodes << "\n";
    }
    st.episodes << std::flush;
  }
  st.summary.records.push_back(rec);
  st.summary.cycle_seconds.insert(st.summary.cycle_seconds.end(), w.cycle_seconds.begin(), w.cycle_seconds.end());
  st.summary.lags.insert(st.summary.lags.end(), w.lags.begin(), w.lags.end());
  st.any_logged = true;
  st.last_logged = w.env_steps;
  while (st.next_log <= w.env_steps) st.next_log += cfg_.log_interval_steps;
}

void Learner::maybe_checkpoint(std::uint64_t env_steps, bool final) {
  if (cfg_.log_dir.empty()) return;
  const bool due = cfg_.checkpoint_interval_steps && env_steps >= next_checkpoint_;
  if (!due && !final) return;
  save_checkpoint(cfg_.log_dir / kCheckpointFile);
  if (cfg_.checkpoint_interval_steps) {
    while (next_checkpoint_ <= env_steps) next_checkpoint_ += *cfg_.checkpoint_interval_steps;
  }
}

TrainSummary Learner::train() {
  LogState st;
  const auto kind = topo_.factories->config().algo.kind;
  const std::uint64_t start_steps = sink_.env_steps();
  st.fps = FpsMeter(start_steps, 0.0);
  st.next_log = (start_steps / cfg_.log_interval_steps + 1) * cfg_.log_interval_steps;
  if (cfg_.checkpoint_interval_steps) {
    next_checkpoint_ = (start_steps / *cfg_.checkpoint_interval_steps + 1) * *cfg_.checkpoint_interval_steps;
  }
  if (!cfg_.log_dir.empty()) {
    std::filesystem::create_directories(cfg_.log_dir);
    const auto log_path = cfg_.log_dir / kLogFile;
    const auto ep_path = cfg_.log_dir / kEpisodeFile;
    const bool append = resumed_ && std::filesystem::exists(log_path);
    st.log.open(log_path, append ? std::ios::app : std::ios::trunc);
    st.episodes.open(ep_path, append ? std::ios::app : std::ios::trunc);
    if (!st.log || !st.episodes) throw ConfigError("cannot write logs in " + cfg_.log_dir.string());
    if (!append) {
      const auto header = log_header(kind);
      for (std::size_t i = 0; i < header.size(); ++i) st.log << (i ? "," : "") << header[i];
      st.log << "\n";
      st.episodes << "env_steps,reward,success\n";
    }
  }
  // Nothing logged yet at the starting step count.
  st.last_logged = start_steps;
  st.any_logged = true;
  st.t0 = Clock::now();

  if (det_) {
    const auto paused = [&] { return cfg_.pause_at_steps && sink_.env_steps() >= *cfg_.pause_at_steps; };
    while (!det_->done() && !paused()) {
      det_->run_round();
      const auto steps = sink_.env_steps();
      if (steps >= st.next_log) emit(st, sink_.drain(), false);
      maybe_checkpoint(steps, false);
    }
  } else {
    if (cfg_.pause_at_steps) throw ConfigError("learner.pause_at_steps requires learner.runtime = deterministic");
    threaded_ = std::make_unique<scheme::ThreadedRuntime>(topo_, cfg_.target_steps, sink_, delays_);
    threaded_->run([&] {
      const auto steps = sink_.env_steps();
      if (steps >= st.next_log) emit(st, sink_.drain(), false);
      maybe_checkpoint(steps, false);
    });
  }
  emit(st, sink_.drain(), true);
  maybe_checkpoint(sink_.env_steps(), true);

  auto& s = st.summary;
  s.env_steps = sink_.env_steps();
  s.updates = sink_.updates();
  s.wall_seconds = seconds_since(st.t0);
  s.fps = st.fps.cumulative(s.env_steps, s.wall_seconds);
  s.params = params();
  return std::move(s);
}

}  // namespace modrl::learner
