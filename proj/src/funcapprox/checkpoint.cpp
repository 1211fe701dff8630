#include "modrl/funcapprox/checkpoint.hpp"

#include "modrl/common/errors.hpp"

namespace modrl::funcapprox {

void write_spec(ByteWriter& w, const MlpSpec& spec) {
  w.u64(spec.input_dim);
  w.u64(spec.hidden_layers.size());
  for (auto h : spec.hidden_layers) w.u64(h);
  w.u64(spec.output_dim);
  w.u8(static_cast<std::uint8_t>(spec.activation));
  w.u8(static_cast<std::uint8_t>(spec.output_activation));
}

MlpSpec read_spec(ByteReader& r) {
  MlpSpec spec;
  spec.input_dim = r.u64();
  const auto n = r.u64();
  if (n > 1024) throw IntegrityError("implausible hidden layer count");
  spec.hidden_layers.resize(n);
  for (auto& h : spec.hidden_layers) h = r.u64();
  spec.output_dim = r.u64();
  const auto act = r.u8();
  const auto out_act = r.u8();
  if (act > 1 || out_act > 1) throw IntegrityError("unknown activation code");
  spec.activation = static_cast<Activation>(act);
  spec.output_activation = static_cast<OutputActivation>(out_act);
  return spec;
}

void write_params(ByteWriter& w, const ParamVector& p) {
  w.u64(p.version);
  w.f64s(p.values);
}

ParamVector read_params(ByteReader& r) {
  ParamVector p;
  p.version = r.u64();
  p.values = r.f64s();
  return p;
}

void write_adam(ByteWriter& w, const AdamState& s) {
  w.u64(s.step_count);
  w.f64s(s.first_moment);
  w.f64s(s.second_moment);
}

AdamState read_adam(ByteReader& r) {
  AdamState s;
  s.step_count = r.u64();
  s.first_moment = r.f64s();
  s.second_moment = r.f64s();
  return s;
}

std::vector<std::uint8_t> encode_model(const ModelCheckpoint& ckpt) {
  ByteWriter w;
  w.u64(ckpt.networks.size());
  for (const auto& s : ckpt.networks) write_spec(w, s);
  write_params(w, ckpt.params);
  write_adam(w, ckpt.optimizer);
  return w.take();
}

ModelCheckpoint decode_model(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  ModelCheckpoint ckpt;
  const auto n = r.u64();
  if (n > 1024) throw IntegrityError("implausible network count");
  for (std::uint64_t i = 0; i < n; ++i) ckpt.networks.push_back(read_spec(r));
  ckpt.params = read_params(r);
  ckpt.optimizer = read_adam(r);
  if (!r.at_end()) throw IntegrityError("trailing bytes in model section");
  return ckpt;
}

void save_model(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
  write_file_atomic(path, encode_container({{"model", encode_model(ckpt)}}));
}

ModelCheckpoint load_model(const std::filesystem::path& path) {
  const auto sections = decode_container(read_file(path));
  const auto it = sections.find("model");
  if (it == sections.end()) throw IntegrityError("checkpoint has no model section");
  return decode_model(it->second);
}

}  // namespace modrl::funcapprox
