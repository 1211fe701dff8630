#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace modrl::scheme {

enum class Communication { kSync, kAsync };
enum class UpdateMode { kCentralized, kDecentralized };

std::string to_string(Communication c);
Communication communication_from_string(const std::string& name);
std::string to_string(UpdateMode m);
UpdateMode update_mode_from_string(const std::string& name);

struct SchemeConfig {
  std::size_t num_grad_workers = 1;
  std::size_t num_col_workers_per_grad = 1;
  Communication col_communication = Communication::kSync;
  Communication grad_communication = Communication::kSync;
  UpdateMode update_mode = UpdateMode::kCentralized;
  std::optional<double> preemption_threshold;
  std::optional<std::size_t> col_slots;   // cap on collection workers
  std::optional<std::size_t> grad_slots;  // cap on gradient workers
  std::size_t queue_depth = 2;
  std::optional<std::uint64_t> max_grad_lag;  // stale gradients beyond this are dropped

  std::size_t num_col_workers() const { return num_grad_workers * num_col_workers_per_grad; }
  void validate() const;

  friend bool operator==(const SchemeConfig&, const SchemeConfig&) = default;
};

enum class NamedArchitecture { kSingleThreaded, kDppo, kAppo, kImpalaApex, kRapid, kAsyncRapid, kDdppo };

std::string to_string(NamedArchitecture a);
NamedArchitecture architecture_from_string(const std::string& name);

struct WorkerCounts {
  std::optional<std::size_t> grad_workers;
  std::optional<std::size_t> col_workers_per_grad;
};

inline constexpr double kDdppoPreemptionThreshold = 0.8;

SchemeConfig resolve_architecture(NamedArchitecture name, const WorkerCounts& counts = {});

// Injected task durations for benchmarking and lag experiments.
struct TaskDelays {
  double collection_ms = 0.0;  // per full collection cycle, spread across its steps
  double collection_jitter = 0.0;  // uniform relative jitter, e.g. 0.5 for +-50%
  double gradient_ms = 0.0;    // per gradient
  double gradient_jitter = 0.0;
  double apply_ms = 0.0;       // per applied update
  std::map<std::size_t, double> stragglers;  // collection worker -> duration multiplier
  std::uint64_t seed = 0;

  bool any() const { return collection_ms > 0 || gradient_ms > 0 || apply_ms > 0; }
};

}  // namespace modrl::scheme
