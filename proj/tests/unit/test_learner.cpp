#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "modrl/common/binary_io.hpp"
#include "modrl/common/errors.hpp"
#include "modrl/learner/learner.hpp"

using namespace modrl;
using namespace modrl::learner;
namespace fs = std::filesystem;

namespace {

scheme::AgentConfig ppo_agent(std::size_t num_envs, std::size_t num_steps, std::size_t epochs = 1,
                              std::size_t minibatches = 1) {
  scheme::AgentConfig c;
  c.env.name = envs::EnvName::kCartPole;
  c.num_envs = num_envs;
  c.hidden = {16};
  c.algo.kind = algos::AlgoKind::kPpo;
  c.algo.num_steps = num_steps;
  c.algo.num_epochs = epochs;
  c.algo.num_mini_batch = minibatches;
  c.algo.lr = 1e-3;
  c.storage.kind = storage::StorageKind::kGae;
  return c;
}

scheme::Topology topology(const scheme::AgentConfig& c, scheme::NamedArchitecture arch, scheme::WorkerCounts counts = {}) {
  return scheme::spawn(scheme::resolve_architecture(arch, counts), std::make_shared<scheme::AgentFactories>(c));
}

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("modrl_learner_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

// Drops the two timing columns.
std::vector<std::vector<std::string>> untimed(std::vector<std::vector<std::string>> rows) {
  for (auto& r : rows) {
    r.erase(r.begin() + 3);
    r.erase(r.begin());
  }
  return rows;
}

}  // namespace

TEST(Fps, Examples) {
  EXPECT_DOUBLE_EQ(*measure_fps(100, 2.0), 50.0);
  EXPECT_FALSE(measure_fps(0, 1.0));
  EXPECT_FALSE(measure_fps(5, 0.0));
  FpsMeter m;
  EXPECT_DOUBLE_EQ(*m.window(100, 1.0), 100.0);
  EXPECT_DOUBLE_EQ(*m.window(300, 2.0), 200.0);
  EXPECT_FALSE(m.window(300, 3.0));
  EXPECT_DOUBLE_EQ(*m.cumulative(300, 3.0), 100.0);
  EXPECT_THROW(m.window(200, 4.0), ConfigError);
  EXPECT_THROW(m.window(400, 1.0), ConfigError);
}

TEST(LearnerConfig, Validation) {
  LearnerConfig c;
  c.target_steps = 100;
  c.log_interval_steps = 50;
  EXPECT_NO_THROW(c.validate());
  c.log_interval_steps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.log_interval_steps = 200;
  EXPECT_THROW(c.validate(), ConfigError);
  c.log_interval_steps = 10;
  c.checkpoint_interval_steps = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(runtime_mode_from_string("fast"), ConfigError);
  EXPECT_EQ(runtime_mode_from_string("threaded"), RuntimeMode::kThreaded);
}

TEST(LogFormat, HeaderAndRecord) {
  const auto h = log_header(algos::AlgoKind::kPpo);
  EXPECT_EQ(h.front(), "wall_time");
  EXPECT_EQ(h.back(), "clip_fraction");
  EXPECT_EQ(log_header(algos::AlgoKind::kDdqn).back(), "q_loss");
  TrainRecord r;
  r.env_steps = 7;
  const auto line = format_record(r, algos::AlgoKind::kSac);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), static_cast<long>(log_header(algos::AlgoKind::kSac).size() - 1));
}

TEST(Learner, StopsAtTargetWithWholeCycles) {
  auto topo = topology(ppo_agent(8, 128, 4, 4), scheme::NamedArchitecture::kSingleThreaded);
  LearnerConfig cfg;
  cfg.target_steps = 2048;
  cfg.log_interval_steps = 1024;
  Learner l(topo, cfg);
  const auto s = l.train();
  EXPECT_EQ(s.env_steps, 2048u);
  EXPECT_EQ(s.updates, 2u * 16u);
  EXPECT_EQ(s.params.version, 32u);
  ASSERT_EQ(s.records.size(), 2u);
  EXPECT_EQ(s.records[0].env_steps, 1024u);
  EXPECT_EQ(s.records[1].env_steps, 2048u);
  EXPECT_TRUE(l.done());
}

TEST(Learner, TargetRoundsUpToWholeCycles) {
  auto topo = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kSingleThreaded);
  LearnerConfig cfg;
  cfg.target_steps = 33;
  cfg.log_interval_steps = 33;
  Learner l(topo, cfg);
  EXPECT_EQ(l.train().env_steps, 64u);
}

TEST(Learner, DeterministicLogsRepeat) {
  std::vector<std::vector<std::vector<std::string>>> logs;
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch_dir("repeat" + std::to_string(run));
    auto topo = topology(ppo_agent(2, 32, 2, 2), scheme::NamedArchitecture::kRapid, {2, 2});
    LearnerConfig cfg;
    cfg.target_steps = 4096;
    cfg.log_interval_steps = 512;
    cfg.log_dir = dir;
    Learner l(topo, cfg);
    l.train();
    logs.push_back(untimed(read_csv(dir / kLogFile)));
    EXPECT_TRUE(fs::exists(dir / kEpisodeFile));
    EXPECT_TRUE(fs::exists(dir / kCheckpointFile));
    fs::remove_all(dir);
  }
  ASSERT_GT(logs[0].size(), 5u);
  EXPECT_EQ(logs[0], logs[1]);
}

TEST(Learner, CheckpointHoldsFinalModel) {
  const auto dir = scratch_dir("final");
  auto topo = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kSingleThreaded);
  LearnerConfig cfg;
  cfg.target_steps = 96;
  cfg.log_interval_steps = 32;
  cfg.log_dir = dir;
  Learner l(topo, cfg);
  l.set_config_snapshot("{\"note\": 1}");
  const auto s = l.train();
  const auto info = read_checkpoint(dir / kCheckpointFile);
  EXPECT_EQ(info.env_steps, 96u);
  EXPECT_EQ(info.updates, 3u);
  EXPECT_EQ(info.config, "{\"note\": 1}");
  EXPECT_TRUE(info.has_runtime_state);
  EXPECT_EQ(info.model.params.values, s.params.values);
  fs::remove_all(dir);
}

TEST(Learner, TruncatedCheckpointIsRejected) {
  const auto dir = scratch_dir("trunc");
  fs::create_directories(dir);
  auto topo = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kSingleThreaded);
  LearnerConfig cfg;
  cfg.target_steps = 64;
  cfg.log_interval_steps = 32;
  Learner l(topo, cfg);
  l.train();
  auto bytes = l.encode_checkpoint();
  for (std::size_t keep : {std::size_t{0}, std::size_t{7}, bytes.size() / 2, bytes.size() - 1}) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep));
    write_file_atomic(dir / "cut.bin", cut);
    EXPECT_THROW(read_checkpoint(dir / "cut.bin"), IntegrityError) << keep;
    auto fresh = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kSingleThreaded);
    Learner other(fresh, cfg);
    EXPECT_THROW(other.load_checkpoint(dir / "cut.bin"), IntegrityError);
  }
  bytes[bytes.size() / 2] ^= 0x40;
  write_file_atomic(dir / "flip.bin", bytes);
  EXPECT_THROW(read_checkpoint(dir / "flip.bin"), IntegrityError);
  fs::remove_all(dir);
}

TEST(Learner, MismatchedAgentIsRejected) {
  const auto dir = scratch_dir("mismatch");
  fs::create_directories(dir);
  auto topo = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kSingleThreaded);
  LearnerConfig cfg;
  cfg.target_steps = 32;
  cfg.log_interval_steps = 32;
  Learner l(topo, cfg);
  l.train();
  l.save_checkpoint(dir / "ck.bin");
  auto wide = ppo_agent(2, 16);
  wide.hidden = {32};
  auto other = topology(wide, scheme::NamedArchitecture::kSingleThreaded);
  Learner w(other, cfg);
  EXPECT_THROW(w.load_checkpoint(dir / "ck.bin"), ConfigError);
  cfg.runtime = RuntimeMode::kThreaded;
  auto t = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kSingleThreaded);
  Learner threaded(t, cfg);
  EXPECT_THROW(threaded.load_checkpoint(dir / "ck.bin"), ConfigError);
  fs::remove_all(dir);
}

class SplitRun : public ::testing::TestWithParam<std::tuple<scheme::NamedArchitecture, scheme::WorkerCounts>> {};

TEST_P(SplitRun, FivePlusFiveEqualsTen) {
  const auto [arch, counts] = GetParam();
  const auto agent = ppo_agent(2, 16);
  const auto dir = scratch_dir("split");
  const auto probe = topology(agent, arch, counts);
  const std::uint64_t per_update = probe.scheme.grad_communication == scheme::Communication::kSync
                                        ? 32 * probe.scheme.num_col_workers()
                                        : 32 * probe.scheme.num_col_workers_per_grad;

  auto full_topo = topology(agent, arch, counts);
  LearnerConfig full_cfg;
  full_cfg.target_steps = 10 * per_update;
  full_cfg.log_interval_steps = per_update;
  Learner full(full_topo, full_cfg);
  const auto whole = full.train();
  ASSERT_GE(whole.updates, 10u);

  auto first_topo = topology(agent, arch, counts);
  LearnerConfig half_cfg = full_cfg;
  half_cfg.pause_at_steps = 5 * per_update;
  half_cfg.log_dir = dir;
  Learner first(first_topo, half_cfg);
  const auto before = first.train();
  EXPECT_FALSE(first.done());
  EXPECT_LT(before.updates, whole.updates);

  auto second_topo = topology(agent, arch, counts);
  LearnerConfig rest_cfg = full_cfg;
  rest_cfg.log_dir = dir;
  Learner second(second_topo, rest_cfg);
  second.load_checkpoint(dir / kCheckpointFile);
  const auto resumed = second.train();

  EXPECT_EQ(resumed.env_steps, whole.env_steps);
  EXPECT_EQ(resumed.updates, whole.updates);
  EXPECT_EQ(resumed.params.version, whole.params.version);
  EXPECT_EQ(resumed.params.values, whole.params.values);

  // The resumed log continues the first one.
  const auto rows = read_csv(dir / kLogFile);
  ASSERT_GE(rows.size(), 3u);
  std::set<std::string> steps;
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_TRUE(steps.insert(rows[i][1]).second);
  EXPECT_EQ(rows.back()[1], std::to_string(whole.env_steps));
  fs::remove_all(dir);
}

INSTANTIATE_TEST_SUITE_P(
    Schemes, SplitRun,
    ::testing::Values(std::make_tuple(scheme::NamedArchitecture::kSingleThreaded, scheme::WorkerCounts{}),
                      std::make_tuple(scheme::NamedArchitecture::kDdppo, scheme::WorkerCounts{2, 2}),
                      std::make_tuple(scheme::NamedArchitecture::kAsyncRapid, scheme::WorkerCounts{2, 2}),
                      std::make_tuple(scheme::NamedArchitecture::kImpalaApex, scheme::WorkerCounts{std::nullopt, 3})));

TEST(Learner, PauseNeedsDeterministicRuntime) {
  auto topo = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kSingleThreaded);
  LearnerConfig cfg;
  cfg.target_steps = 64;
  cfg.log_interval_steps = 32;
  cfg.pause_at_steps = 32;
  cfg.runtime = RuntimeMode::kThreaded;
  Learner l(topo, cfg);
  EXPECT_THROW(l.train(), ConfigError);
}

TEST(Learner, ThreadedRunReachesTarget) {
  auto topo = topology(ppo_agent(2, 16), scheme::NamedArchitecture::kAsyncRapid, {2, 2});
  LearnerConfig cfg;
  cfg.target_steps = 640;
  cfg.log_interval_steps = 128;
  cfg.runtime = RuntimeMode::kThreaded;
  Learner l(topo, cfg);
  const auto s = l.train();
  EXPECT_GE(s.env_steps, 640u);
  EXPECT_GT(s.updates, 0u);
  EXPECT_FALSE(s.records.empty());
}

TEST(Evaluate, EvalSeedsAreHeldOut) {
  const auto a = eval_seeds(3, 50);
  EXPECT_EQ(a, eval_seeds(3, 50));
  const std::set<std::uint64_t> uniq(a.begin(), a.end());
  EXPECT_EQ(uniq.size(), 50u);
  for (std::uint64_t s = 0; s < 10000; ++s) EXPECT_FALSE(uniq.count(s));
  EXPECT_NE(eval_seeds(4, 5), eval_seeds(3, 5));
}

TEST(Evaluate, ScoresMatchManualRollout) {
  const scheme::Policy left = [](const Matrix& o) { return Matrix::Zero(o.rows(), 1); };
  envs::EnvSpec spec;
  spec.name = envs::EnvName::kCartPole;
  const std::vector<std::uint64_t> seeds{11, 12, 13};
  const auto st = evaluate(left, spec, seeds, 2);
  ASSERT_EQ(st.scores.size(), 6u);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    auto sp = spec;
    sp.seed = seeds[s];
    auto env = envs::env_make(sp);
    for (std::size_t a = 0; a < 2; ++a) {
      env->reset();
      double total = 0.0;
      while (true) {
        const auto r = env->step(std::vector<double>{0.0});
        total += r.reward;
        if (r.done) break;
      }
      EXPECT_EQ(st.scores[s * 2 + a], total);
    }
  }
  EXPECT_LT(st.max, 30.0);
  EXPECT_LE(st.min, st.mean);
  EXPECT_LE(st.mean, st.max);
  EXPECT_EQ(st.success_rate, 0.0);
}

TEST(Evaluate, BitflipOracleAlwaysSucceeds) {
  const std::size_t n = 6;
  const scheme::Policy oracle = [n](const Matrix& o) {
    Matrix a = Matrix::Zero(1, 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (o(0, static_cast<Eigen::Index>(i)) != o(0, static_cast<Eigen::Index>(n + i))) {
        a(0, 0) = static_cast<double>(i);
        break;
      }
    }
    return a;
  };
  envs::EnvSpec spec;
  spec.name = envs::EnvName::kBitFlip;
  spec.extra["n"] = static_cast<double>(n);
  const auto seeds = eval_seeds(0, 10);
  const auto st = evaluate(oracle, spec, seeds);
  EXPECT_EQ(st.success_rate, 1.0);
  for (double s : st.scores) EXPECT_GT(s, -static_cast<double>(n) - 1.0);
  EXPECT_THROW(evaluate(oracle, spec, std::vector<std::uint64_t>{}), ConfigError);
}
