#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "modrl/learner/learner.hpp"
#include "modrl/scheme/agent.hpp"
#include "modrl/scheme/config.hpp"

namespace modrl::cli {

using Json = nlohmann::ordered_json;

struct RunConfig {
  scheme::AgentConfig agent;
  std::optional<scheme::NamedArchitecture> architecture;
  scheme::SchemeConfig scheme;
  learner::LearnerConfig learner;
  scheme::TaskDelays delays;
};

inline constexpr const char* kEnvPrefix = "MODRL_";

// Every key the config file accepts, with its default value. Keys whose
// default is null are optional.
Json default_config();

std::vector<std::string> profile_names();
// Partial document layered over default_config(); ConfigError if unknown.
Json profile(const std::string& name);

// Overlays `patch` onto `base`. Keys absent from `base` are rejected with
// their dotted path, except inside free-form maps.
void merge_strict(Json& base, const Json& patch, const std::string& path = "");

// MODRL_LEARNER__TARGET_STEPS=5000 sets learner.target_steps. Values are
// parsed as JSON when possible, else taken as strings.
Json env_overrides(const std::map<std::string, std::string>& env);
std::map<std::string, std::string> current_environment();

// Sets a dotted key ("agent.algo.lr") from a raw string value.
void set_path(Json& doc, const std::string& dotted, const std::string& raw);

// Reads a fully merged document. Every failure is a ConfigError naming the field.
RunConfig parse_run_config(const Json& doc);

// Defaults < profile < file < environment, then validation.
Json resolve_document(const std::optional<std::string>& profile_name, const std::optional<Json>& file,
                      const std::map<std::string, std::string>& env);

}  // namespace modrl::cli
