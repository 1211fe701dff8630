#include "modrl/cli/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "modrl/cli/curves.hpp"
#include "modrl/common/errors.hpp"

namespace modrl::cli {

namespace {

using Clock = std::chrono::steady_clock;

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("'" + s + "': expected key=value");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? num(*v) : std::string("-"); }

void print_eval(std::ostream& out, const learner::EvalStats& st, std::span<const std::uint64_t> seeds,
                std::size_t attempts) {
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    out << "seed " << seeds[s] << ":";
    for (std::size_t a = 0; a < attempts; ++a) out << " " << num(st.scores[s * attempts + a]);
    out << "\n";
  }
  out << "episodes " << st.scores.size() << " mean " << num(st.mean) << " min " << num(st.min) << " max "
      << num(st.max) << " success_rate " << num(st.success_rate) << "\n";
}

}  // namespace

Json train_document(const TrainOptions& opts, const std::map<std::string, std::string>& env) {
  std::optional<Json> file;
  if (opts.config_path) file = read_json_file(*opts.config_path);
  Json doc = resolve_document(opts.profile, file, env);
  Json flags = Json::object();
  if (opts.scheme) {
    auto& s = flags["scheme"];
    s["architecture"] = *opts.scheme;
    for (const char* k : {"grad_workers", "col_workers", "col_communication", "grad_communication", "update_mode",
                          "preemption_threshold"}) {
      s[k] = nullptr;
    }
  }
  if (opts.grad_workers) flags["scheme"]["grad_workers"] = *opts.grad_workers;
  if (opts.col_workers) flags["scheme"]["col_workers"] = *opts.col_workers;
  if (opts.target_steps) flags["learner"]["target_steps"] = *opts.target_steps;
  if (opts.log_dir) flags["learner"]["log_dir"] = *opts.log_dir;
  if (opts.runtime) flags["learner"]["runtime"] = *opts.runtime;
  if (opts.seed) flags["seed"] = *opts.seed;
  for (const auto& s : opts.sets) {
    const auto [k, v] = split_assignment(s);
    set_path(flags, k, v);
  }
  merge_strict(doc, flags);
  return doc;
}

TrainResult run_training(const RunConfig& rc, const Json& snapshot, const std::optional<std::string>& resume) {
  auto factories = std::make_shared<const scheme::AgentFactories>(rc.agent);
  auto topo = scheme::spawn(rc.scheme, factories);
  learner::Learner learner(topo, rc.learner, rc.delays);
  learner.set_config_snapshot(snapshot.dump());
  if (!rc.learner.log_dir.empty()) {
    std::filesystem::create_directories(rc.learner.log_dir);
    std::ofstream(rc.learner.log_dir / "config.json") << snapshot.dump(2) << "\n";
  }
  if (resume) learner.load_checkpoint(*resume);
  TrainResult res;
  res.summary = learner.train();
  if (rc.learner.eval_episodes > 0) {
    const auto seeds = learner::eval_seeds(rc.agent.seed, rc.learner.eval_episodes);
    res.eval = learner::evaluate(factories->make_policy(res.summary.params), rc.agent.env, seeds);
  }
  return res;
}

learner::EvalStats run_eval(const EvalOptions& opts, std::vector<std::uint64_t>* seeds_used) {
  require(opts.episodes >= 1, "eval: --episodes must be at least 1");
  const auto info = learner::read_checkpoint(opts.checkpoint);
  Json doc;
  try {
    doc = Json::parse(info.config);
  } catch (const Json::parse_error&) {
    throw ConfigError("checkpoint carries no readable run configuration");
  }
  auto rc = parse_run_config(doc);
  if (opts.env) {
    rc.agent.env.name = envs::env_name_from_string(*opts.env);
    rc.agent.env.extra.clear();
  }
  for (const auto& p : opts.env_params) {
    const auto [k, v] = split_assignment(p);
    try {
      rc.agent.env.extra[k] = std::stod(v);
    } catch (const std::exception&) {
      throw ConfigError("--env-param " + k + ": expected a number");
    }
  }
  const auto probe = envs::env_make(rc.agent.env);
  const auto& nets = info.model.networks;
  require(!nets.empty(), "checkpoint has no networks");
  if (nets.front().input_dim != probe->observation_dim()) {
    throw ConfigError("dimension mismatch: checkpoint expects observation dim " + std::to_string(nets.front().input_dim) +
                      " but env '" + envs::to_string(rc.agent.env.name) + "' provides " +
                      std::to_string(probe->observation_dim()));
  }
  const scheme::AgentFactories factories(rc.agent);
  if (factories.networks() != nets) {
    throw ConfigError("dimension mismatch: env '" + envs::to_string(rc.agent.env.name) +
                      "' action space does not fit the checkpoint's networks");
  }
  auto seeds = opts.seeds.empty() ? learner::eval_seeds(rc.agent.seed, opts.num_seeds) : opts.seeds;
  require(!seeds.empty(), "eval: need at least one seed");
  if (seeds_used) *seeds_used = seeds;
  return learner::evaluate(factories.make_policy(info.model.params), rc.agent.env, seeds, opts.episodes);
}

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  require(opts.duration_seconds >= 0.0, "bench: duration must be non-negative");
  require(opts.workload == "synthetic" || opts.workload == "real", "bench: workload must be synthetic or real");
  std::vector<BenchRow> rows;
  if (opts.duration_seconds == 0.0) return rows;
  Json doc = resolve_document(opts.profile, std::nullopt, {});
  doc["seed"] = opts.seed;
  if (opts.workload == "synthetic") {
    // One cheap gradient per cycle so the injected durations dominate.
    doc["agent"]["hidden"] = {16};
    doc["agent"]["algo"]["num_epochs"] = 1;
    doc["agent"]["algo"]["num_mini_batch"] = 1;
    doc["delays"]["collection_ms"] = opts.collection_ms;
    doc["delays"]["collection_jitter"] = opts.collection_jitter;
    doc["delays"]["gradient_ms"] = opts.gradient_ms;
    doc["delays"]["gradient_jitter"] = opts.gradient_jitter;
    doc["delays"]["apply_ms"] = opts.apply_ms;
    doc["delays"]["seed"] = opts.seed;
  }
  doc["learner"]["target_steps"] = std::numeric_limits<std::uint32_t>::max();
  doc["learner"]["log_interval_steps"] = 1;
  doc["learner"]["runtime"] = "threaded";
  for (const auto& name : opts.schemes) {
    Json d = doc;
    d["scheme"]["architecture"] = name;
    if (name != "single_threaded") {
      if (opts.grad_workers) d["scheme"]["grad_workers"] = *opts.grad_workers;
      if (opts.col_workers) d["scheme"]["col_workers"] = *opts.col_workers;
    }
    const auto rc = parse_run_config(d);
    auto factories = std::make_shared<const scheme::AgentFactories>(rc.agent);
    auto topo = scheme::spawn(rc.scheme, factories);
    scheme::MetricsSink sink;
    scheme::ThreadedRuntime rt(topo, rc.learner.target_steps, sink, rc.delays);
    const auto t0 = Clock::now();
    const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(opts.duration_seconds));
    std::uint64_t steps_at_stop = 0;
    double seconds_at_stop = 0.0;
    bool stopped = false;
    rt.run(
        [&] {
          if (!stopped && Clock::now() >= deadline) {
            stopped = true;
            steps_at_stop = sink.env_steps();
            seconds_at_stop = std::chrono::duration<double>(Clock::now() - t0).count();
            rt.request_stop();
          }
        },
        std::chrono::milliseconds(5));
    const auto w = sink.drain();
    const auto lag = scheme::lag_metrics(w.lags);
    BenchRow r;
    r.scheme = name;
    r.env_steps = steps_at_stop;
    r.seconds = seconds_at_stop;
    r.fps = learner::measure_fps(steps_at_stop, seconds_at_stop);
    r.policy_lag = lag.policy_lag;
    r.grad_async = lag.grad_async;
    r.updates = w.updates;
    r.dropped = w.dropped_gradients;
    rows.push_back(r);
  }
  return rows;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s %12s %10s %10s %10s %8s %8s\n", "scheme", "fps", "PL", "GA", "env_steps",
                "updates", "dropped");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-18s %12s %10.4f %10.4f %10llu %8llu %8llu\n", r.scheme.c_str(),
                  fmt_opt(r.fps).c_str(), r.policy_lag, r.grad_async, static_cast<unsigned long long>(r.env_steps),
                  static_cast<unsigned long long>(r.updates), static_cast<unsigned long long>(r.dropped));
    out << buf;
  }
  return out.str();
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "scheme,fps,policy_lag,grad_async,env_steps,updates,dropped,seconds\n";
  for (const auto& r : rows) {
    out += r.scheme + "," + (r.fps ? num(*r.fps) : std::string()) + "," + num(r.policy_lag) + "," +
           num(r.grad_async) + "," + std::to_string(r.env_steps) + "," + std::to_string(r.updates) + "," +
           std::to_string(r.dropped) + "," + num(r.seconds) + "\n";
  }
  return out;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"modular distributed RL runtime"};
  app.require_subcommand(1);

  TrainOptions topts;
  auto* train = app.add_subcommand("train", "train an agent");
  train->add_option("-c,--config", topts.config_path, "JSON config file");
  train->add_option("-p,--profile", topts.profile, "shipped profile to start from");
  train->add_option("--scheme", topts.scheme, "architecture name");
  train->add_option("--grad-workers", topts.grad_workers);
  train->add_option("--col-workers", topts.col_workers, "collection workers per gradient worker");
  train->add_option("--target-steps", topts.target_steps);
  train->add_option("--seed", topts.seed);
  train->add_option("--log-dir", topts.log_dir);
  train->add_option("--runtime", topts.runtime, "deterministic or threaded");
  train->add_option("--resume", topts.resume, "checkpoint to continue from");
  train->add_option("--set", topts.sets, "override, e.g. agent.algo.lr=3e-4");
  bool list_profiles = false;
  train->add_flag("--list-profiles", list_profiles);

  EvalOptions eopts;
  std::string seeds_csv;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", eopts.checkpoint)->required();
  eval->add_option("--env", eopts.env);
  eval->add_option("--env-param", eopts.env_params, "key=value");
  eval->add_option("--episodes", eopts.episodes, "attempts per seed");
  eval->add_option("--seeds", seeds_csv, "comma-separated seeds");
  eval->add_option("--num-seeds", eopts.num_seeds, "held-out seeds when --seeds is absent");

  BenchOptions bopts;
  std::string schemes_csv;
  std::optional<std::string> bench_csv;
  auto* bench = app.add_subcommand("bench", "compare schemes on one workload");
  bench->add_option("--schemes", schemes_csv, "comma-separated architecture names");
  bench->add_option("--workload", bopts.workload, "synthetic or real");
  bench->add_option("--profile", bopts.profile);
  bench->add_option("--duration", bopts.duration_seconds, "seconds per scheme");
  bench->add_option("--collection-ms", bopts.collection_ms);
  bench->add_option("--collection-jitter", bopts.collection_jitter);
  bench->add_option("--gradient-ms", bopts.gradient_ms);
  bench->add_option("--gradient-jitter", bopts.gradient_jitter);
  bench->add_option("--apply-ms", bopts.apply_ms);
  bench->add_option("--grad-workers", bopts.grad_workers);
  bench->add_option("--col-workers", bopts.col_workers);
  bench->add_option("--seed", bopts.seed);
  bench->add_option("--csv", bench_csv, "also write the table as CSV");

  std::string log_path;
  std::size_t window = 100, minmax_window = 20;
  std::optional<std::string> curves_out;
  auto* curves_cmd = app.add_subcommand("curves", "smooth a training log into plot-ready rows");
  curves_cmd->add_option("log", log_path)->required();
  curves_cmd->add_option("--window", window, "moving-average window");
  curves_cmd->add_option("--minmax-window", minmax_window, "rolling min/max window");
  curves_cmd->add_option("-o,--out", curves_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  auto split_csv = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream in(s);
    std::string p;
    while (std::getline(in, p, ',')) {
      if (!p.empty()) parts.push_back(p);
    }
    return parts;
  };

  try {
    if (*train) {
      if (list_profiles) {
        for (const auto& n : profile_names()) out << n << "\n";
        return kExitOk;
      }
      const auto doc = train_document(topts, current_environment());
      const auto rc = parse_run_config(doc);
      const auto res = run_training(rc, doc, topts.resume);
      const auto& s = res.summary;
      out << "env_steps " << s.env_steps << " updates " << s.updates << " seconds " << num(s.wall_seconds) << " fps "
          << fmt_opt(s.fps) << "\n";
      if (res.eval) {
        out << "eval ";
        out << "episodes " << res.eval->scores.size() << " mean " << num(res.eval->mean) << " min "
            << num(res.eval->min) << " max " << num(res.eval->max) << " success_rate "
            << num(res.eval->success_rate) << "\n";
        if (!rc.learner.log_dir.empty()) {
          Json e = {{"episodes", res.eval->scores.size()}, {"mean", res.eval->mean}, {"min", res.eval->min},
                    {"max", res.eval->max},  {"success_rate", res.eval->success_rate}, {"scores", res.eval->scores}};
          std::ofstream(rc.learner.log_dir / "eval.json") << e.dump(2) << "\n";
        }
      }
    } else if (*eval) {
      for (const auto& s : split_csv(seeds_csv)) {
        try {
          eopts.seeds.push_back(std::stoull(s));
        } catch (const std::exception&) {
          throw ConfigError("--seeds: '" + s + "' is not an integer");
        }
      }
      std::vector<std::uint64_t> used;
      const auto st = run_eval(eopts, &used);
      print_eval(out, st, used, eopts.episodes);
    } else if (*bench) {
      if (!schemes_csv.empty()) bopts.schemes = split_csv(schemes_csv);
      const auto rows = run_bench(bopts);
      out << format_bench_table(rows);
      if (bench_csv) std::ofstream(*bench_csv) << format_bench_csv(rows);
    } else if (*curves_cmd) {
      std::ifstream in(log_path);
      if (!in) throw ConfigError("cannot open log '" + log_path + "'");
      const auto text = format_curves(curves(read_reward_series(in), window, minmax_window));
      if (curves_out) {
        std::ofstream(*curves_out) << text;
      } else {
        out << text;
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace modrl::cli
