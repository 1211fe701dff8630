#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "modrl/cli/config.hpp"

namespace modrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct TrainOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> profile;
  std::optional<std::string> scheme;
  std::optional<std::size_t> grad_workers;
  std::optional<std::size_t> col_workers;
  std::optional<std::uint64_t> target_steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> log_dir;
  std::optional<std::string> runtime;
  std::optional<std::string> resume;
  std::vector<std::string> sets;  // "dotted.key=value"
};

// Final document for a train invocation: defaults < profile < file <
// environment < command-line flags.
Json train_document(const TrainOptions& opts, const std::map<std::string, std::string>& env);

struct TrainResult {
  learner::TrainSummary summary;
  std::optional<learner::EvalStats> eval;
};

TrainResult run_training(const RunConfig& rc, const Json& snapshot, const std::optional<std::string>& resume = {});

struct EvalOptions {
  std::string checkpoint;
  std::optional<std::string> env;
  std::vector<std::string> env_params;  // "key=value"
  std::size_t episodes = 1;             // attempts per seed
  std::vector<std::uint64_t> seeds;     // empty: held-out seeds
  std::size_t num_seeds = 5;
};

learner::EvalStats run_eval(const EvalOptions& opts, std::vector<std::uint64_t>* seeds_used = nullptr);

struct BenchOptions {
  std::vector<std::string> schemes = {"single_threaded", "async_rapid"};
  std::string workload = "synthetic";  // synthetic | real
  std::string profile = "cartpole-ppo-singlethreaded";
  double duration_seconds = 5.0;
  double collection_ms = 20.0;
  double collection_jitter = 0.5;
  double gradient_ms = 30.0;
  double gradient_jitter = 0.0;
  double apply_ms = 0.0;
  std::optional<std::size_t> grad_workers;
  std::optional<std::size_t> col_workers;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string scheme;
  std::optional<double> fps;
  double policy_lag = 0.0;
  double grad_async = 0.0;
  std::uint64_t env_steps = 0;
  std::uint64_t updates = 0;
  std::uint64_t dropped = 0;
  double seconds = 0.0;
};

std::vector<BenchRow> run_bench(const BenchOptions& opts);
std::string format_bench_table(const std::vector<BenchRow>& rows);
std::string format_bench_csv(const std::vector<BenchRow>& rows);

// Entry point used by the modrl binary.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace modrl::cli
