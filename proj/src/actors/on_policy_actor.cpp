#include "modrl/actors/on_policy_actor.hpp"

#include <cmath>

#include "modrl/actors/distributions.hpp"
#include "modrl/common/errors.hpp"

namespace modrl::actors {

namespace {

using funcapprox::MlpSpec;

MlpSpec make_policy_spec(const OnPolicyActorConfig& c) {
  MlpSpec s;
  s.input_dim = c.obs_dim;
  s.hidden_layers = c.hidden;
  s.output_dim = c.action_space.is_discrete() ? c.action_space.n : c.action_space.width();
  s.activation = c.activation;
  return s;
}

MlpSpec make_value_spec(const OnPolicyActorConfig& c) {
  MlpSpec s;
  s.input_dim = c.obs_dim;
  s.hidden_layers = c.hidden;
  s.output_dim = 1;
  s.activation = c.activation;
  return s;
}

void validate(const OnPolicyActorConfig& c) {
  if (c.obs_dim == 0) throw ConfigError("actor obs_dim must be >= 1");
  make_policy_spec(c).validate();
}

}  // namespace

std::size_t OnPolicyActor::param_count(const OnPolicyActorConfig& config) {
  const std::size_t extra = config.action_space.is_discrete() ? 0 : config.action_space.width();
  return make_policy_spec(config).param_count() + make_value_spec(config).param_count() + extra;
}

OnPolicyActor::OnPolicyActor(OnPolicyActorConfig config, funcapprox::ParamVector params)
    : config_(std::move(config)),
      policy_spec_(make_policy_spec(config_)),
      value_spec_(make_value_spec(config_)) {
  validate(config_);
  policy_seg_ = {0, policy_spec_.param_count()};
  value_seg_ = {policy_seg_.size, value_spec_.param_count()};
  log_std_seg_ = {value_seg_.offset + value_seg_.size,
                  config_.action_space.is_discrete() ? 0 : config_.action_space.width()};
  set_params(std::move(params));
}

void OnPolicyActor::set_params(funcapprox::ParamVector params) {
  if (params.size() != param_count(config_)) {
    throw ConfigError("on-policy actor expects " + std::to_string(param_count(config_)) + " parameters, got " +
                      std::to_string(params.size()));
  }
  params_ = std::move(params);
}

void OnPolicyActor::check_obs(const Matrix& obs) const {
  if (static_cast<std::size_t>(obs.cols()) != config_.obs_dim) {
    throw ConfigError("observation width " + std::to_string(obs.cols()) + " does not match actor obs_dim " +
                      std::to_string(config_.obs_dim));
  }
  if (!obs.allFinite()) throw NumericFault("non-finite observation passed to actor");
}

ActionBatch OnPolicyActor::act(const Matrix& obs, bool deterministic, Rng& rng) const {
  check_obs(obs);
  const auto batch = obs.rows();
  const Matrix out = funcapprox::mlp_forward_batch(policy_spec_, policy_seg_.of(std::span<const double>(params_.values)), obs);
  ActionBatch result;
  result.values = values(obs);
  result.log_probs.resize(static_cast<std::size_t>(batch));
  result.entropies.resize(static_cast<std::size_t>(batch));
  const auto width = static_cast<Eigen::Index>(config_.action_space.width());
  result.actions.resize(batch, width);

  if (dist_kind() == DistKind::kCategorical) {
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto lp = log_softmax(row_span(out, b));
      std::size_t chosen = 0;
      if (deterministic) {
        chosen = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      } else {
        const double u = rng.uniform();
        double cdf = 0.0;
        chosen = lp.size() - 1;
        for (std::size_t k = 0; k < lp.size(); ++k) {
          cdf += std::exp(lp[k]);
          if (u < cdf) {
            chosen = k;
            break;
          }
        }
      }
      result.actions(b, 0) = static_cast<double>(chosen);
      result.log_probs[static_cast<std::size_t>(b)] = lp[chosen];
      result.entropies[static_cast<std::size_t>(b)] = categorical_entropy(lp);
    }
  } else {
    const auto ls = log_std();
    const double entropy = gaussian_entropy(ls);
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (Eigen::Index j = 0; j < width; ++j) {
        const double noise = deterministic ? 0.0 : rng.normal();
        result.actions(b, j) = out(b, j) + std::exp(ls[static_cast<std::size_t>(j)]) * noise;
      }
      result.log_probs[static_cast<std::size_t>(b)] =
          gaussian_log_prob(row_span(result.actions, b), row_span(out, b), ls);
      result.entropies[static_cast<std::size_t>(b)] = entropy;
    }
  }
  return result;
}

std::vector<double> OnPolicyActor::values(const Matrix& obs) const {
  check_obs(obs);
  const Matrix v = funcapprox::mlp_forward_batch(value_spec_, value_seg_.of(std::span<const double>(params_.values)), obs);
  return {v.data(), v.data() + v.size()};
}

Evaluation OnPolicyActor::evaluate_actions(const Matrix& obs, const Matrix& actions) const {
  check_obs(obs);
  if (actions.rows() != obs.rows()) throw ConfigError("action and observation batch sizes differ");
  if (static_cast<std::size_t>(actions.cols()) != config_.action_space.width()) {
    throw ConfigError("action width does not match the action space");
  }
  if (dist_kind() == DistKind::kCategorical) {
    for (Eigen::Index b = 0; b < actions.rows(); ++b) {
      if (!config_.action_space.contains(row_span(actions, b))) {
        throw ContractViolation("action outside the actor's action space");
      }
    }
  }
  const Matrix out = funcapprox::mlp_forward_batch(policy_spec_, policy_seg_.of(std::span<const double>(params_.values)), obs);
  Evaluation ev;
  ev.values = values(obs);
  const auto batch = static_cast<std::size_t>(obs.rows());
  ev.log_probs.resize(batch);
  ev.entropies.resize(batch);
  if (dist_kind() == DistKind::kCategorical) {
    for (std::size_t b = 0; b < batch; ++b) {
      const auto lp = log_softmax(row_span(out, static_cast<Eigen::Index>(b)));
      ev.log_probs[b] = lp[static_cast<std::size_t>(actions(static_cast<Eigen::Index>(b), 0))];
      ev.entropies[b] = categorical_entropy(lp);
    }
  } else {
    const auto ls = log_std();
    const double entropy = gaussian_entropy(ls);
    for (std::size_t b = 0; b < batch; ++b) {
      const auto row = static_cast<Eigen::Index>(b);
      ev.log_probs[b] = gaussian_log_prob(row_span(actions, row), row_span(out, row), ls);
      ev.entropies[b] = entropy;
    }
  }
  return ev;
}

std::vector<double> OnPolicyActor::backward(const Matrix& obs, const Matrix& actions, std::span<const double> dlogp,
                                            std::span<const double> dentropy, std::span<const double> dvalue) const {
  check_obs(obs);
  const auto batch = static_cast<std::size_t>(obs.rows());
  if (dlogp.size() != batch || dentropy.size() != batch || dvalue.size() != batch ||
      static_cast<std::size_t>(actions.rows()) != batch) {
    throw ConfigError("backward: batch size mismatch");
  }
  std::vector<double> grad(params_.size(), 0.0);
  std::vector<double> dlog_std(log_std_seg_.size, 0.0);
  const auto ls = log_std();

  auto policy_upstream = [&](const Matrix& out) -> Matrix {
    Matrix d = Matrix::Zero(out.rows(), out.cols());
    for (std::size_t b = 0; b < batch; ++b) {
      const auto row = static_cast<Eigen::Index>(b);
      if (dist_kind() == DistKind::kCategorical) {
        const auto lp = log_softmax(row_span(out, row));
        const double h = categorical_entropy(lp);
        const auto a = static_cast<Eigen::Index>(actions(row, 0));
        for (Eigen::Index k = 0; k < out.cols(); ++k) {
          const double p = std::exp(lp[static_cast<std::size_t>(k)]);
          double g = dlogp[b] * ((k == a ? 1.0 : 0.0) - p);
          g += dentropy[b] * (-p * (lp[static_cast<std::size_t>(k)] + h));
          d(row, k) = g;
        }
      } else {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
          const auto ju = static_cast<std::size_t>(j);
          const double inv_var = std::exp(-2.0 * ls[ju]);
          const double diff = actions(row, j) - out(row, j);
          d(row, j) = dlogp[b] * diff * inv_var;
          dlog_std[ju] += dlogp[b] * (diff * diff * inv_var - 1.0) + dentropy[b];
        }
      }
    }
    return d;
  };
  const auto pb = funcapprox::mlp_forward_backward(policy_spec_, policy_seg_.of(std::span<const double>(params_.values)),
                                                   obs, policy_upstream);
  std::copy(pb.param_grad.begin(), pb.param_grad.end(), grad.begin() + static_cast<std::ptrdiff_t>(policy_seg_.offset));

  const auto vb = funcapprox::mlp_forward_backward(
      value_spec_, value_seg_.of(std::span<const double>(params_.values)), obs, [&](const Matrix& out) -> Matrix {
        Matrix d(out.rows(), 1);
        for (std::size_t b = 0; b < batch; ++b) d(static_cast<Eigen::Index>(b), 0) = dvalue[b];
        return d;
      });
  std::copy(vb.param_grad.begin(), vb.param_grad.end(), grad.begin() + static_cast<std::ptrdiff_t>(value_seg_.offset));
  std::copy(dlog_std.begin(), dlog_std.end(), grad.begin() + static_cast<std::ptrdiff_t>(log_std_seg_.offset));
  return grad;
}

OnPolicyActorFactory::OnPolicyActorFactory(OnPolicyActorConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  validate(config_);
}

OnPolicyActor OnPolicyActorFactory::operator()() const {
  Rng rng(derive_seed(seed_, 0xAC7011));
  const double gain = funcapprox::default_gain(config_.activation);
  const auto policy = funcapprox::orthogonal_init(make_policy_spec(config_), gain, 0.01, rng);
  const auto value = funcapprox::orthogonal_init(make_value_spec(config_), gain, 1.0, rng);
  funcapprox::ParamVector p;
  p.values.reserve(OnPolicyActor::param_count(config_));
  p.values.insert(p.values.end(), policy.begin(), policy.end());
  p.values.insert(p.values.end(), value.begin(), value.end());
  if (!config_.action_space.is_discrete()) {
    p.values.insert(p.values.end(), config_.action_space.width(), config_.initial_log_std);
  }
  return OnPolicyActor(config_, std::move(p));
}

OnPolicyActorFactory create_factory(const OnPolicyActorConfig& config, std::uint64_t seed) {
  return OnPolicyActorFactory(config, seed);
}

}  // namespace modrl::actors
