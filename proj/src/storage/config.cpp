#include "modrl/storage/config.hpp"

#include "modrl/common/errors.hpp"

namespace modrl::storage {

std::string to_string(StorageKind k) {
  switch (k) {
    case StorageKind::kVanilla: return "vanilla";
    case StorageKind::kGae: return "gae";
    case StorageKind::kVtrace: return "vtrace";
    case StorageKind::kReplay: return "replay";
    case StorageKind::kHer: return "her";
  }
  return "?";
}

StorageKind storage_kind_from_string(const std::string& name) {
  for (auto k : {StorageKind::kVanilla, StorageKind::kGae, StorageKind::kVtrace, StorageKind::kReplay,
                 StorageKind::kHer}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown storage kind '" + name + "' (expected vanilla, gae, vtrace, replay or her)");
}

void StorageConfig::validate() const {
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "storage.gae_lambda must lie in [0, 1]");
  require(rho_bar > 0.0 && c_bar > 0.0, "storage.rho_bar and storage.c_bar must be positive");
  require(capacity >= 1, "storage.capacity must be >= 1");
}

}  // namespace modrl::storage
