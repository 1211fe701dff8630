#pragma once

#include <cstddef>
#include <string>

#include "modrl/storage/replay.hpp"

namespace modrl::storage {

enum class StorageKind { kVanilla, kGae, kVtrace, kReplay, kHer };

std::string to_string(StorageKind k);
StorageKind storage_kind_from_string(const std::string& name);
inline bool is_on_policy(StorageKind k) { return k == StorageKind::kVanilla || k == StorageKind::kGae || k == StorageKind::kVtrace; }

struct StorageConfig {
  StorageKind kind = StorageKind::kGae;
  double gae_lambda = 0.95;
  double rho_bar = 1.0;
  double c_bar = 1.0;
  std::size_t capacity = ReplayBuffer::kDefaultCapacity;
  std::size_t her_k = 4;
  HerStrategy her_strategy = HerStrategy::kFuture;

  void validate() const;
};

}  // namespace modrl::storage
