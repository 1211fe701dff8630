#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "modrl/envs/env.hpp"
#include "modrl/funcapprox/checkpoint.hpp"
#include "modrl/scheme/runtime.hpp"

namespace modrl::learner {

enum class RuntimeMode { kDeterministic, kThreaded };

std::string to_string(RuntimeMode mode);
RuntimeMode runtime_mode_from_string(const std::string& name);

struct LearnerConfig {
  std::uint64_t target_steps = 0;
  std::filesystem::path log_dir;  // empty: no files written
  std::uint64_t log_interval_steps = 1000;
  std::optional<std::uint64_t> checkpoint_interval_steps;
  std::size_t eval_episodes = 10;
  RuntimeMode runtime = RuntimeMode::kDeterministic;
  // Deterministic mode only: stop once this many steps are done, as if
  // interrupted, and leave the target untouched for a later resume.
  std::optional<std::uint64_t> pause_at_steps;

  void validate() const;
};

// fps over a window; absent when the window saw no steps or no time.
std::optional<double> measure_fps(std::uint64_t steps, double seconds);

class FpsMeter {
 public:
  explicit FpsMeter(std::uint64_t steps = 0, double time = 0.0);

  // Closes the current window at (steps, time) and opens the next one.
  std::optional<double> window(std::uint64_t steps, double time);
  std::optional<double> cumulative(std::uint64_t steps, double time) const;

 private:
  std::uint64_t start_steps_, last_steps_;
  double start_time_, last_time_;
};

struct TrainRecord {
  double wall_time = 0.0;
  std::uint64_t env_steps = 0;
  std::uint64_t updates = 0;
  std::optional<double> fps;
  std::optional<double> reward_mean, reward_min, reward_max;
  double policy_lag = 0.0;
  double grad_async = 0.0;
  std::uint64_t dropped_gradients = 0;
  std::optional<algos::LossStats> loss;
};

std::vector<std::string> loss_columns(algos::AlgoKind kind);
std::vector<std::string> log_header(algos::AlgoKind kind);
std::string format_record(const TrainRecord& rec, algos::AlgoKind kind);

struct TrainSummary {
  std::uint64_t env_steps = 0;
  std::uint64_t updates = 0;
  double wall_seconds = 0.0;
  std::optional<double> fps;
  std::vector<TrainRecord> records;
  std::vector<double> cycle_seconds;
  std::vector<scheme::LagSample> lags;
  funcapprox::ParamVector params;
};

struct EvalStats {
  std::vector<double> scores;  // seed-major: scores[s * attempts + a]
  std::vector<double> successes;
  double mean = 0.0, min = 0.0, max = 0.0;
  double success_rate = 0.0;
};

inline constexpr std::uint64_t kEvalSeedOffset = 0x5EED0FF5E7;

// Held-out seeds disjoint from the collection seeds of any run with `seed`.
std::vector<std::uint64_t> eval_seeds(std::uint64_t seed, std::size_t count);

// One env per seed, `attempts` consecutive episodes each.
EvalStats evaluate(const scheme::Policy& policy, const envs::EnvSpec& spec, std::span<const std::uint64_t> seeds,
                   std::size_t attempts = 1);

inline constexpr const char* kLogFile = "train.csv";
inline constexpr const char* kEpisodeFile = "episodes.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";

struct CheckpointInfo {
  funcapprox::ModelCheckpoint model;
  std::uint64_t env_steps = 0;
  std::uint64_t updates = 0;
  std::string config;  // caller-provided run description, opaque here
  bool has_runtime_state = false;
};

CheckpointInfo read_checkpoint(const std::filesystem::path& path);

class Learner {
 public:
  Learner(scheme::Topology& topo, LearnerConfig cfg, scheme::TaskDelays delays = {});

  bool done() const;
  TrainSummary train();

  // Deterministic mode stores the full runtime state so a resumed run
  // continues the identical trajectory; threaded mode stores the model only.
  std::vector<std::uint8_t> encode_checkpoint() const;
  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

  void set_config_snapshot(std::string text) { config_snapshot_ = std::move(text); }
  funcapprox::ParamVector params() const;
  scheme::MetricsSink& sink() { return sink_; }
  const LearnerConfig& config() const { return cfg_; }

 private:
  struct LogState;

  void emit(LogState& log, const scheme::MetricsWindow& w, bool final);
  void maybe_checkpoint(std::uint64_t env_steps, bool final);
  funcapprox::ModelCheckpoint model() const;

  scheme::Topology& topo_;
  LearnerConfig cfg_;
  scheme::TaskDelays delays_;
  scheme::MetricsSink sink_;
  std::unique_ptr<scheme::DeterministicRuntime> det_;
  std::unique_ptr<scheme::ThreadedRuntime> threaded_;
  std::string config_snapshot_;
  bool resumed_ = false;
  std::uint64_t next_checkpoint_ = 0;
};

}  // namespace modrl::learner
