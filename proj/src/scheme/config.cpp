#include "modrl/scheme/config.hpp"

#include "modrl/common/errors.hpp"

namespace modrl::scheme {

std::string to_string(Communication c) { return c == Communication::kSync ? "sync" : "async"; }

Communication communication_from_string(const std::string& name) {
  if (name == "sync") return Communication::kSync;
  if (name == "async") return Communication::kAsync;
  throw ConfigError("unknown communication mode '" + name + "' (expected sync or async)");
}

std::string to_string(UpdateMode m) { return m == UpdateMode::kCentralized ? "centralized" : "decentralized"; }

UpdateMode update_mode_from_string(const std::string& name) {
  if (name == "centralized") return UpdateMode::kCentralized;
  if (name == "decentralized") return UpdateMode::kDecentralized;
  throw ConfigError("unknown update mode '" + name + "' (expected centralized or decentralized)");
}

void SchemeConfig::validate() const {
  require(num_grad_workers >= 1, "scheme.grad_workers must be >= 1");
  require(num_col_workers_per_grad >= 1, "scheme.col_workers must be >= 1");
  require(queue_depth >= 1, "scheme.queue_depth must be >= 1");
  if (update_mode == UpdateMode::kDecentralized && grad_communication != Communication::kSync) {
    throw ConfigError("decentralized updates require grad_communication = sync");
  }
  if (preemption_threshold) {
    const double t = *preemption_threshold;
    require(t > 0.0 && t <= 1.0, "scheme.preemption_threshold must lie in (0, 1]");
    require(col_communication == Communication::kSync, "preemption requires col_communication = sync");
    require(num_col_workers_per_grad >= 2, "preemption requires at least 2 collection workers per gradient worker");
  }
  if (grad_slots && num_grad_workers > *grad_slots) {
    throw ConfigError("scheme needs " + std::to_string(num_grad_workers) + " gradient workers but only " +
                      std::to_string(*grad_slots) + " grad slots are available");
  }
  if (col_slots && num_col_workers() > *col_slots) {
    throw ConfigError("scheme needs " + std::to_string(num_col_workers()) + " collection workers but only " +
                      std::to_string(*col_slots) + " col slots are available");
  }
}

namespace {

constexpr NamedArchitecture kAll[] = {NamedArchitecture::kSingleThreaded, NamedArchitecture::kDppo,
                                      NamedArchitecture::kAppo,           NamedArchitecture::kImpalaApex,
                                      NamedArchitecture::kRapid,          NamedArchitecture::kAsyncRapid,
                                      NamedArchitecture::kDdppo};

std::size_t exactly_one(const std::optional<std::size_t>& v, const char* what, const std::string& arch) {
  if (v && *v != 1) {
    throw ConfigError("architecture '" + arch + "' requires exactly 1 " + what + " (got " + std::to_string(*v) + ")");
  }
  return 1;
}

std::size_t at_least_one(const std::optional<std::size_t>& v, std::size_t fallback, const char* what,
                         const std::string& arch) {
  if (v && *v < 1) throw ConfigError("architecture '" + arch + "' needs at least 1 " + what);
  return v.value_or(fallback);
}

}  // namespace

std::string to_string(NamedArchitecture a) {
  switch (a) {
    case NamedArchitecture::kSingleThreaded: return "single_threaded";
    case NamedArchitecture::kDppo: return "dppo";
    case NamedArchitecture::kAppo: return "appo";
    case NamedArchitecture::kImpalaApex: return "impala_apex";
    case NamedArchitecture::kRapid: return "rapid";
    case NamedArchitecture::kAsyncRapid: return "async_rapid";
    case NamedArchitecture::kDdppo: return "ddppo";
  }
  return "?";
}

NamedArchitecture architecture_from_string(const std::string& name) {
  for (auto a : kAll) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown architecture '" + name +
                    "' (expected single_threaded, dppo, appo, impala_apex, rapid, async_rapid or ddppo)");
}

SchemeConfig resolve_architecture(NamedArchitecture name, const WorkerCounts& counts) {
  const auto arch = to_string(name);
  SchemeConfig s;
  const auto& g = counts.grad_workers;
  const auto& c = counts.col_workers_per_grad;
  switch (name) {
    case NamedArchitecture::kSingleThreaded:
      s.num_grad_workers = exactly_one(g, "gradient worker", arch);
      s.num_col_workers_per_grad = exactly_one(c, "collection worker per gradient worker", arch);
      break;
    case NamedArchitecture::kDppo:
      s.num_grad_workers = at_least_one(g, 1, "gradient worker", arch);
      s.num_col_workers_per_grad = exactly_one(c, "collection worker per gradient worker", arch);
      break;
    case NamedArchitecture::kAppo:
      s.num_grad_workers = at_least_one(g, 1, "gradient worker", arch);
      s.num_col_workers_per_grad = exactly_one(c, "collection worker per gradient worker", arch);
      s.grad_communication = Communication::kAsync;
      break;
    case NamedArchitecture::kImpalaApex:
      s.num_grad_workers = exactly_one(g, "gradient worker", arch);
      s.num_col_workers_per_grad = at_least_one(c, 1, "collection worker per gradient worker", arch);
      s.col_communication = Communication::kAsync;
      break;
    case NamedArchitecture::kRapid:
      s.num_grad_workers = at_least_one(g, 1, "gradient worker", arch);
      s.num_col_workers_per_grad = at_least_one(c, 1, "collection worker per gradient worker", arch);
      s.col_communication = Communication::kAsync;
      break;
    case NamedArchitecture::kAsyncRapid:
      s.num_grad_workers = at_least_one(g, 1, "gradient worker", arch);
      s.num_col_workers_per_grad = at_least_one(c, 1, "collection worker per gradient worker", arch);
      s.col_communication = Communication::kAsync;
      s.grad_communication = Communication::kAsync;
      break;
    case NamedArchitecture::kDdppo:
      s.num_grad_workers = at_least_one(g, 1, "gradient worker", arch);
      s.num_col_workers_per_grad = at_least_one(c, 2, "collection worker per gradient worker", arch);
      s.update_mode = UpdateMode::kDecentralized;
      s.preemption_threshold = kDdppoPreemptionThreshold;
      break;
  }
  s.validate();
  return s;
}

}  // namespace modrl::scheme
