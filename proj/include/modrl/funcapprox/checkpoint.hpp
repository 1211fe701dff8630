#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "modrl/common/binary_io.hpp"
#include "modrl/funcapprox/mlp.hpp"
#include "modrl/funcapprox/optim.hpp"

namespace modrl::funcapprox {

// Networks sharing one flat parameter vector (in order) plus the optimizer
// state that goes with it.
struct ModelCheckpoint {
  std::vector<MlpSpec> networks;
  ParamVector params;
  AdamState optimizer;

  friend bool operator==(const ModelCheckpoint&, const ModelCheckpoint&) = default;
};

void write_spec(ByteWriter& w, const MlpSpec& spec);
MlpSpec read_spec(ByteReader& r);
void write_params(ByteWriter& w, const ParamVector& p);
ParamVector read_params(ByteReader& r);
void write_adam(ByteWriter& w, const AdamState& s);
AdamState read_adam(ByteReader& r);

std::vector<std::uint8_t> encode_model(const ModelCheckpoint& ckpt);
ModelCheckpoint decode_model(const std::vector<std::uint8_t>& bytes);

void save_model(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
ModelCheckpoint load_model(const std::filesystem::path& path);

}  // namespace modrl::funcapprox
