#include "modrl/common/errors.hpp"
#include "modrl/scheme/runtime.hpp"

namespace modrl::scheme {

std::vector<std::uint64_t> Topology::replica_hashes() const {
  std::vector<std::uint64_t> out;
  for (const auto& c : collection) out.push_back(funcapprox::hash_params(c.collector->params().values));
  for (const auto& g : gradient) out.push_back(funcapprox::hash_params(g.computer->params().values));
  out.push_back(funcapprox::hash_params(update.params.values));
  return out;
}

Topology spawn(const SchemeConfig& scheme, std::shared_ptr<const AgentFactories> factories) {
  scheme.validate();
  if (!factories) throw ConfigError("spawn needs agent factories");
  Topology t;
  t.scheme = scheme;
  t.factories = factories;
  const auto C = scheme.num_col_workers_per_grad;
  for (std::size_t g = 0; g < scheme.num_grad_workers; ++g) {
    GradientWorker gw;
    gw.index = g;
    gw.computer = factories->make_gradient_computer(g);
    if (scheme.update_mode == UpdateMode::kDecentralized) gw.updater = factories->make_updater();
    for (std::size_t c = 0; c < C; ++c) {
      const auto idx = g * C + c;
      t.collection.push_back({idx, g, factories->make_collector(idx)});
      gw.collection.push_back(idx);
    }
    t.gradient.push_back(std::move(gw));
  }
  t.update.params = factories->initial_params();
  if (scheme.update_mode == UpdateMode::kCentralized) t.update.updater = factories->make_updater();
  for (auto& c : t.collection) c.collector->set_params(t.update.params);
  for (auto& g : t.gradient) g.computer->set_params(t.update.params);
  return t;
}

funcapprox::Gradient average_gradients(std::span<const funcapprox::Gradient* const> grads) {
  if (grads.empty()) throw ContractViolation("cannot average zero gradients");
  funcapprox::Gradient out;
  out.values.assign(grads.front()->size(), 0.0);
  out.computed_with_version = grads.front()->computed_with_version;
  out.data_collected_with_version = grads.front()->data_collected_with_version;
  for (const auto* g : grads) {
    if (g->size() != out.values.size()) throw ConfigError("gradient length mismatch in reduction");
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += g->values[i];
    out.computed_with_version = std::min(out.computed_with_version, g->computed_with_version);
    out.data_collected_with_version = std::min(out.data_collected_with_version, g->data_collected_with_version);
  }
  const double inv = 1.0 / static_cast<double>(grads.size());
  for (double& v : out.values) v *= inv;
  return out;
}

}  // namespace modrl::scheme
