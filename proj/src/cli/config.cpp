#include "modrl/cli/config.hpp"

#include <algorithm>
#include <cctype>

#include "modrl/common/errors.hpp"

extern char** environ;

namespace modrl::cli {

namespace {

Json optional_json(const auto& v) { return v ? Json(*v) : Json(nullptr); }

Json decay_json(const algos::DecaySpec& d) {
  Json ms = Json::array();
  for (const auto& m : d.milestones) ms.push_back({{"at", m.at}, {"factor", m.factor}});
  return {{"kind", algos::to_string(d.kind)}, {"milestones", ms}};
}

bool free_form(const std::string& path) { return path == "environment.params" || path == "delays.stragglers"; }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Field reader that turns every type error into a ConfigError naming the field.
class Reader {
 public:
  Reader(const Json& doc, std::string path) : doc_(doc), path_(std::move(path)) {}

  const Json& node(const std::string& key) const {
    if (!doc_.is_object() || !doc_.contains(key)) throw ConfigError(join(path_, key) + ": missing");
    return doc_.at(key);
  }
  Reader sub(const std::string& key) const {
    const auto& n = node(key);
    if (!n.is_object()) throw ConfigError(join(path_, key) + ": expected an object");
    return Reader(n, join(path_, key));
  }
  bool is_null(const std::string& key) const { return node(key).is_null(); }

  double real(const std::string& key) const {
    const auto& n = node(key);
    if (!n.is_number()) throw ConfigError(join(path_, key) + ": expected a number");
    return n.get<double>();
  }
  std::uint64_t count(const std::string& key) const {
    const auto& n = node(key);
    if (n.is_number_unsigned()) return n.get<std::uint64_t>();
    if (n.is_number_integer() && n.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(n.get<std::int64_t>());
    if (n.is_number_float()) {
      const double v = n.get<double>();
      if (v >= 0 && v == static_cast<double>(static_cast<std::uint64_t>(v))) return static_cast<std::uint64_t>(v);
    }
    throw ConfigError(join(path_, key) + ": expected a non-negative integer");
  }
  bool boolean(const std::string& key) const {
    const auto& n = node(key);
    if (!n.is_boolean()) throw ConfigError(join(path_, key) + ": expected true or false");
    return n.get<bool>();
  }
  std::string text(const std::string& key) const {
    const auto& n = node(key);
    if (!n.is_string()) throw ConfigError(join(path_, key) + ": expected a string");
    return n.get<std::string>();
  }
  std::optional<double> opt_real(const std::string& key) const {
    return is_null(key) ? std::nullopt : std::optional<double>(real(key));
  }
  std::optional<std::uint64_t> opt_count(const std::string& key) const {
    return is_null(key) ? std::nullopt : std::optional<std::uint64_t>(count(key));
  }
  template <typename F>
  auto parsed(const std::string& key, F&& parse) const {
    const auto s = text(key);
    try {
      return parse(s);
    } catch (const ConfigError& e) {
      throw ConfigError(join(path_, key) + ": " + e.what());
    }
  }
  std::vector<std::size_t> sizes(const std::string& key) const {
    const auto& n = node(key);
    if (!n.is_array()) throw ConfigError(join(path_, key) + ": expected an array of positive integers");
    std::vector<std::size_t> out;
    for (const auto& v : n) {
      if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
        throw ConfigError(join(path_, key) + ": expected an array of positive integers");
      }
      out.push_back(v.get<std::size_t>());
    }
    return out;
  }
  algos::DecaySpec decay(const std::string& key) const {
    const auto r = sub(key);
    algos::DecaySpec d;
    d.kind = r.parsed("kind", algos::decay_kind_from_string);
    const auto& ms = r.node("milestones");
    if (!ms.is_array()) throw ConfigError(join(r.path_, "milestones") + ": expected an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      Reader m(ms[i], join(r.path_, "milestones[" + std::to_string(i) + "]"));
      m.check_keys({"at", "factor"});
      d.milestones.push_back({m.real("at"), m.real("factor")});
    }
    return d;
  }
  void check_keys(std::initializer_list<const char*> keys) const {
    if (!doc_.is_object()) throw ConfigError(path_ + ": expected an object");
    for (const auto& [k, v] : doc_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
        throw ConfigError(join(path_, k) + ": unknown key");
      }
    }
  }
  const Json& raw() const { return doc_; }
  const std::string& path() const { return path_; }

 private:
  const Json& doc_;
  std::string path_;
};

Json parse_scalar(const std::string& raw) {
  try {
    return Json::parse(raw);
  } catch (const Json::parse_error&) {
    return Json(raw);
  }
}

}  // namespace

Json default_config() {
  const scheme::AgentConfig agent;
  const auto& a = agent.algo;
  const auto& s = agent.storage;
  const learner::LearnerConfig l;
  const scheme::SchemeConfig sc;
  Json doc;
  doc["seed"] = agent.seed;
  doc["environment"] = {{"name", envs::to_string(agent.env.name)}, {"num_envs", agent.num_envs}, {"params", Json::object()}};
  doc["agent"] = {
      {"hidden", agent.hidden},
      {"activation", funcapprox::to_string(agent.activation)},
      {"initial_log_std", agent.initial_log_std},
      {"algo",
       {{"kind", algos::to_string(a.kind)},
        {"gamma", a.gamma},
        {"adam", {{"beta1", a.adam.beta1}, {"beta2", a.adam.beta2}, {"epsilon", a.adam.epsilon}}},
        {"lr", a.lr},
        {"lr_decay", decay_json(a.lr_decay)},
        {"num_steps", a.num_steps},
        {"clip_param", a.clip_param},
        {"clip_decay", decay_json(a.clip_decay)},
        {"entropy_coef", a.entropy_coef},
        {"value_loss_coef", a.value_loss_coef},
        {"num_epochs", a.num_epochs},
        {"num_mini_batch", a.num_mini_batch},
        {"max_grad_norm", a.max_grad_norm},
        {"batch_size", a.batch_size},
        {"start_steps", a.start_steps},
        {"num_updates", a.num_updates},
        {"update_every", a.update_every},
        {"epsilon_start", a.epsilon_start},
        {"epsilon_end", a.epsilon_end},
        {"epsilon_fraction", a.epsilon_fraction},
        {"target_update_period", a.target_update_period},
        {"target_tau", optional_json(a.target_tau)},
        {"huber", a.huber},
        {"lr_q", a.lr_q},
        {"lr_policy", a.lr_policy},
        {"lr_alpha", a.lr_alpha},
        {"initial_alpha", a.initial_alpha},
        {"target_entropy", optional_json(a.target_entropy)},
        {"polyak", a.polyak}}},
      {"storage",
       {{"kind", storage::to_string(s.kind)},
        {"gae_lambda", s.gae_lambda},
        {"rho_bar", s.rho_bar},
        {"c_bar", s.c_bar},
        {"capacity", s.capacity},
        {"her_k", s.her_k},
        {"her_strategy", storage::to_string(s.her_strategy)}}}};
  doc["scheme"] = {{"architecture", "single_threaded"},
                   {"grad_workers", nullptr},
                   {"col_workers", nullptr},
                   {"col_communication", nullptr},
                   {"grad_communication", nullptr},
                   {"update_mode", nullptr},
                   {"preemption_threshold", nullptr},
                   {"queue_depth", sc.queue_depth},
                   {"max_grad_lag", nullptr},
                   {"col_slots", nullptr},
                   {"grad_slots", nullptr}};
  doc["learner"] = {{"target_steps", l.target_steps},
                    {"log_dir", ""},
                    {"log_interval_steps", l.log_interval_steps},
                    {"checkpoint_interval_steps", nullptr},
                    {"eval_episodes", l.eval_episodes},
                    {"runtime", learner::to_string(l.runtime)}};
  doc["delays"] = {{"collection_ms", 0.0}, {"collection_jitter", 0.0}, {"gradient_ms", 0.0}, {"gradient_jitter", 0.0},
                   {"apply_ms", 0.0},      {"stragglers", Json::object()}, {"seed", 0}};
  return doc;
}

std::vector<std::string> profile_names() {
  return {"cartpole-ppo", "cartpole-ppo-singlethreaded", "pendulum-sac", "gridworld-ddqn",
          "bitflip-her",  "bitflip-replay",             "atari-ppo",    "pybullet-sac"};
}

Json profile(const std::string& name) {
  // Large-scale PPO settings (pixel Atari runs).
  const Json large_ppo = {{"kind", "ppo"},
                           {"lr", 2.5e-4},
                           {"lr_decay", {{"kind", "linear_to_zero"}, {"milestones", Json::array()}}},
                           {"clip_param", 0.15},
                           {"clip_decay", {{"kind", "linear_to_zero"}, {"milestones", Json::array()}}},
                           {"gamma", 0.99},
                           {"num_steps", 128},
                           {"num_mini_batch", 4},
                           {"num_epochs", 3},
                           {"entropy_coef", 0.01},
                           {"value_loss_coef", 1.0},
                           {"max_grad_norm", 0.5}};
  // Large-scale SAC settings (PyBullet locomotion).
  const Json large_sac = {{"kind", "sac"},        {"lr_q", 1e-3},         {"lr_policy", 1e-4},
                           {"lr_alpha", 1e-5},     {"gamma", 0.98},        {"initial_alpha", 0.2},
                           {"polyak", 0.995},      {"batch_size", 256},    {"start_steps", 10000},
                           {"num_updates", 32},    {"update_every", 128}};

  if (name == "atari-ppo") {
    return {{"environment", {{"name", "cartpole"}, {"num_envs", 8}}},
            {"agent", {{"algo", large_ppo}, {"storage", {{"kind", "gae"}, {"gae_lambda", 0.95}}}}},
            {"learner", {{"target_steps", 200000}, {"log_interval_steps", 4096}}}};
  }
  if (name == "pybullet-sac") {
    return {{"environment", {{"name", "pendulum"}, {"num_envs", 1}}},
            {"agent",
             {{"hidden", {256, 256}},
              {"activation", "relu"},
              {"algo", large_sac},
              {"storage", {{"kind", "replay"}, {"capacity", 1500000}}}}},
            {"learner", {{"target_steps", 100000}, {"log_interval_steps", 2048}}}};
  }
  if (name == "cartpole-ppo" || name == "cartpole-ppo-singlethreaded") {
    Json algo = large_ppo;
    algo["lr"] = 1e-3;
    algo["clip_param"] = 0.2;
    algo["num_steps"] = 32;
    algo["num_epochs"] = 10;
    algo["num_mini_batch"] = 1;
    algo["entropy_coef"] = 0.0;
    algo["value_loss_coef"] = 0.5;
    algo["gamma"] = 0.98;
    Json p = {{"environment", {{"name", "cartpole"}, {"num_envs", 8}}},
              {"agent", {{"algo", algo}, {"storage", {{"kind", "gae"}, {"gae_lambda", 0.8}}}}},
              {"scheme", {{"architecture", "single_threaded"}}},
              {"learner", {{"target_steps", 200000}, {"log_interval_steps", 2048}, {"eval_episodes", 100}}}};
    if (name == "cartpole-ppo-singlethreaded") {
      p["learner"]["target_steps"] = 20480;
      p["learner"]["eval_episodes"] = 5;
    }
    return p;
  }
  if (name == "pendulum-sac") {
    Json algo = large_sac;
    algo["lr_policy"] = 1e-3;
    algo["lr_alpha"] = 1e-3;
    algo["start_steps"] = 1000;
    return {{"environment", {{"name", "pendulum"}, {"num_envs", 1}}},
            {"agent",
             {{"hidden", {64, 64}},
              {"activation", "relu"},
              {"algo", algo},
              {"storage", {{"kind", "replay"}, {"capacity", 100000}}}}},
            {"learner", {{"target_steps", 100000}, {"log_interval_steps", 2000}, {"eval_episodes", 10}}}};
  }
  if (name == "gridworld-ddqn") {
    return {{"environment", {{"name", "gridworld"}, {"num_envs", 1}, {"params", {{"size", 5}}}}},
            {"agent",
             {{"hidden", {64, 64}},
              {"activation", "relu"},
              {"algo",
               {{"kind", "ddqn"},
                {"lr", 1e-3},
                {"gamma", 0.95},
                {"batch_size", 64},
                {"start_steps", 1000},
                {"update_every", 16},
                {"num_updates", 4},
                {"epsilon_fraction", 0.3},
                {"target_update_period", 100},
                {"max_grad_norm", 10.0}}},
              {"storage", {{"kind", "replay"}, {"capacity", 50000}}}}},
            {"learner", {{"target_steps", 50000}, {"log_interval_steps", 1000}, {"eval_episodes", 100}}}};
  }
  if (name == "bitflip-her" || name == "bitflip-replay") {
    return {{"environment", {{"name", "bitflip"}, {"num_envs", 1}, {"params", {{"n", 15}}}}},
            {"agent",
             {{"hidden", {256}},
              {"activation", "relu"},
              {"algo",
               {{"kind", "ddqn"},
                {"lr", 1e-3},
                {"gamma", 0.98},
                {"batch_size", 128},
                {"start_steps", 1000},
                {"update_every", 16},
                {"num_updates", 4},
                {"epsilon_start", 0.2},
                {"epsilon_end", 0.05},
                {"epsilon_fraction", 0.5},
                {"target_update_period", 200},
                {"max_grad_norm", 10.0}}},
              {"storage",
               {{"kind", name == "bitflip-her" ? "her" : "replay"},
                {"capacity", 200000},
                {"her_k", 4},
                {"her_strategy", "future"}}}}},
            {"learner", {{"target_steps", 200000}, {"log_interval_steps", 5000}, {"eval_episodes", 100}}}};
  }
  std::string known;
  for (const auto& n : profile_names()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown profile '" + name + "' (known: " + known + ")");
}

void merge_strict(Json& base, const Json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [k, v] : patch.items()) {
    const auto p = join(path, k);
    if (!base.contains(k)) throw ConfigError(p + ": unknown key");
    auto& slot = base[k];
    if (free_form(p)) {
      if (!v.is_object()) throw ConfigError(p + ": expected an object");
      for (const auto& [mk, mv] : v.items()) slot[mk] = mv;
    } else if (slot.is_object() && !slot.empty() && v.is_object()) {
      merge_strict(slot, v, p);
    } else {
      slot = v;
    }
  }
}

std::map<std::string, std::string> current_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string::npos) out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

void set_path(Json& doc, const std::string& dotted, const std::string& raw) {
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const auto key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("'" + dotted + "': malformed key");
    if (dot == std::string::npos) {
      (*node)[key] = parse_scalar(raw);
      return;
    }
    auto& next = (*node)[key];
    if (next.is_null()) next = Json::object();
    node = &next;
    start = dot + 1;
  }
}

Json env_overrides(const std::map<std::string, std::string>& env) {
  Json patch = Json::object();
  const std::string prefix = kEnvPrefix;
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::string rest = name.substr(prefix.size());
    std::string dotted;
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (rest[i] == '_' && i + 1 < rest.size() && rest[i + 1] == '_') {
        dotted += '.';
        ++i;
      } else {
        dotted += static_cast<char>(std::tolower(static_cast<unsigned char>(rest[i])));
      }
    }
    if (dotted.empty()) continue;
    try {
      set_path(patch, dotted, value);
    } catch (const ConfigError& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }
  return patch;
}

Json resolve_document(const std::optional<std::string>& profile_name, const std::optional<Json>& file,
                      const std::map<std::string, std::string>& env) {
  Json doc = default_config();
  if (profile_name) merge_strict(doc, profile(*profile_name));
  if (file) merge_strict(doc, *file);
  const auto patch = env_overrides(env);
  try {
    merge_strict(doc, patch);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("environment override ") + e.what());
  }
  return doc;
}

RunConfig parse_run_config(const Json& doc) {
  Reader root(doc, "");
  root.check_keys({"seed", "environment", "agent", "scheme", "learner", "delays"});
  RunConfig rc;
  auto& ag = rc.agent;
  ag.seed = root.count("seed");

  const auto env = root.sub("environment");
  env.check_keys({"name", "num_envs", "params"});
  ag.env.name = env.parsed("name", envs::env_name_from_string);
  ag.num_envs = env.count("num_envs");
  const auto params = env.sub("params");
  for (const auto& [k, v] : params.raw().items()) ag.env.extra[k] = params.real(k);

  const auto agent = root.sub("agent");
  agent.check_keys({"hidden", "activation", "initial_log_std", "algo", "storage"});
  ag.hidden = agent.sizes("hidden");
  ag.activation = agent.parsed("activation", funcapprox::activation_from_string);
  ag.initial_log_std = agent.real("initial_log_std");

  const auto al = agent.sub("algo");
  al.check_keys({"kind",          "gamma",          "adam",           "lr",           "lr_decay",
                 "num_steps",     "clip_param",     "clip_decay",     "entropy_coef", "value_loss_coef",
                 "num_epochs",    "num_mini_batch", "max_grad_norm",  "batch_size",   "start_steps",
                 "num_updates",   "update_every",   "epsilon_start",  "epsilon_end",  "epsilon_fraction",
                 "target_update_period", "target_tau", "huber",       "lr_q",         "lr_policy",
                 "lr_alpha",      "initial_alpha",  "target_entropy", "polyak"});
  auto& a = ag.algo;
  a.kind = al.parsed("kind", algos::algo_kind_from_string);
  a.gamma = al.real("gamma");
  const auto adam = al.sub("adam");
  adam.check_keys({"beta1", "beta2", "epsilon"});
  a.adam.beta1 = adam.real("beta1");
  a.adam.beta2 = adam.real("beta2");
  a.adam.epsilon = adam.real("epsilon");
  a.lr = al.real("lr");
  a.lr_decay = al.decay("lr_decay");
  a.num_steps = al.count("num_steps");
  a.clip_param = al.real("clip_param");
  a.clip_decay = al.decay("clip_decay");
  a.entropy_coef = al.real("entropy_coef");
  a.value_loss_coef = al.real("value_loss_coef");
  a.num_epochs = al.count("num_epochs");
  a.num_mini_batch = al.count("num_mini_batch");
  a.max_grad_norm = al.real("max_grad_norm");
  a.batch_size = al.count("batch_size");
  a.start_steps = al.count("start_steps");
  a.num_updates = al.count("num_updates");
  a.update_every = al.count("update_every");
  a.epsilon_start = al.real("epsilon_start");
  a.epsilon_end = al.real("epsilon_end");
  a.epsilon_fraction = al.real("epsilon_fraction");
  a.target_update_period = al.count("target_update_period");
  a.target_tau = al.opt_real("target_tau");
  a.huber = al.boolean("huber");
  a.lr_q = al.real("lr_q");
  a.lr_policy = al.real("lr_policy");
  a.lr_alpha = al.real("lr_alpha");
  a.initial_alpha = al.real("initial_alpha");
  a.target_entropy = al.opt_real("target_entropy");
  a.polyak = al.real("polyak");

  const auto st = agent.sub("storage");
  st.check_keys({"kind", "gae_lambda", "rho_bar", "c_bar", "capacity", "her_k", "her_strategy"});
  auto& s = ag.storage;
  s.kind = st.parsed("kind", storage::storage_kind_from_string);
  s.gae_lambda = st.real("gae_lambda");
  s.rho_bar = st.real("rho_bar");
  s.c_bar = st.real("c_bar");
  s.capacity = st.count("capacity");
  s.her_k = st.count("her_k");
  s.her_strategy = st.parsed("her_strategy", storage::her_strategy_from_string);

  const auto sc = root.sub("scheme");
  sc.check_keys({"architecture", "grad_workers", "col_workers", "col_communication", "grad_communication",
                 "update_mode", "preemption_threshold", "queue_depth", "max_grad_lag", "col_slots", "grad_slots"});
  if (!sc.is_null("architecture")) {
    rc.architecture = sc.parsed("architecture", scheme::architecture_from_string);
    scheme::WorkerCounts counts;
    counts.grad_workers = sc.opt_count("grad_workers");
    counts.col_workers_per_grad = sc.opt_count("col_workers");
    try {
      rc.scheme = scheme::resolve_architecture(*rc.architecture, counts);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("scheme: ") + e.what());
    }
  } else {
    rc.scheme.num_grad_workers = sc.opt_count("grad_workers").value_or(1);
    rc.scheme.num_col_workers_per_grad = sc.opt_count("col_workers").value_or(1);
  }
  if (!sc.is_null("col_communication")) rc.scheme.col_communication = sc.parsed("col_communication", scheme::communication_from_string);
  if (!sc.is_null("grad_communication")) rc.scheme.grad_communication = sc.parsed("grad_communication", scheme::communication_from_string);
  if (!sc.is_null("update_mode")) rc.scheme.update_mode = sc.parsed("update_mode", scheme::update_mode_from_string);
  if (!sc.is_null("preemption_threshold")) rc.scheme.preemption_threshold = sc.real("preemption_threshold");
  rc.scheme.queue_depth = sc.count("queue_depth");
  rc.scheme.max_grad_lag = sc.opt_count("max_grad_lag");
  rc.scheme.col_slots = sc.opt_count("col_slots");
  rc.scheme.grad_slots = sc.opt_count("grad_slots");

  const auto le = root.sub("learner");
  le.check_keys({"target_steps", "log_dir", "log_interval_steps", "checkpoint_interval_steps", "eval_episodes", "runtime"});
  auto& l = rc.learner;
  l.target_steps = le.count("target_steps");
  l.log_dir = le.text("log_dir");
  l.log_interval_steps = le.count("log_interval_steps");
  l.checkpoint_interval_steps = le.opt_count("checkpoint_interval_steps");
  l.eval_episodes = le.count("eval_episodes");
  l.runtime = le.parsed("runtime", learner::runtime_mode_from_string);

  const auto de = root.sub("delays");
  de.check_keys({"collection_ms", "collection_jitter", "gradient_ms", "gradient_jitter", "apply_ms", "stragglers", "seed"});
  auto& d = rc.delays;
  d.collection_ms = de.real("collection_ms");
  d.collection_jitter = de.real("collection_jitter");
  d.gradient_ms = de.real("gradient_ms");
  d.gradient_jitter = de.real("gradient_jitter");
  d.apply_ms = de.real("apply_ms");
  d.seed = de.count("seed");
  const auto strag = de.sub("stragglers");
  for (const auto& [k, v] : strag.raw().items()) {
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoul(k, &used);
      if (used != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      throw ConfigError("delays.stragglers." + k + ": key must be a collection worker index");
    }
    d.stragglers[idx] = strag.real(k);
  }
  for (double v : {d.collection_ms, d.collection_jitter, d.gradient_ms, d.gradient_jitter, d.apply_ms}) {
    require(v >= 0.0, "delays: durations and jitters must be non-negative");
  }
  require(d.collection_jitter <= 1.0 && d.gradient_jitter <= 1.0, "delays: jitter must be at most 1");

  // Validation with field names; family mismatches name both components.
  ag.validate();
  try {
    rc.scheme.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("scheme: ") + e.what());
  }
  for (const auto& [w, m] : d.stragglers) {
    require(w < rc.scheme.num_col_workers(), "delays.stragglers." + std::to_string(w) + ": no such collection worker");
    require(m > 0.0, "delays.stragglers." + std::to_string(w) + ": multiplier must be positive");
  }
  l.validate();
  return rc;
}

}  // namespace modrl::cli
