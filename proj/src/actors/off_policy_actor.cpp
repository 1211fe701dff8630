#include "modrl/actors/off_policy_actor.hpp"

#include <algorithm>
#include <cmath>

#include "modrl/actors/distributions.hpp"
#include "modrl/common/errors.hpp"

namespace modrl::actors {

namespace {

using funcapprox::MlpSpec;
using funcapprox::Segment;

MlpSpec make_policy_spec(const OffPolicyActorConfig& c) {
  MlpSpec s;
  s.input_dim = c.obs_dim;
  s.hidden_layers = c.hidden;
  s.output_dim = 2 * c.action_space.width();
  s.activation = c.activation;
  return s;
}

MlpSpec make_q_spec(const OffPolicyActorConfig& c) {
  MlpSpec s;
  s.hidden_layers = c.hidden;
  s.activation = c.activation;
  if (c.mode == OffPolicyMode::kDdqn) {
    s.input_dim = c.obs_dim;
    s.output_dim = c.action_space.n;
  } else {
    s.input_dim = c.obs_dim + c.action_space.width();
    s.output_dim = 1;
  }
  return s;
}

void validate(const OffPolicyActorConfig& c) {
  if (c.obs_dim == 0) throw ConfigError("actor obs_dim must be >= 1");
  if (c.mode == OffPolicyMode::kDdqn && !c.action_space.is_discrete()) {
    throw ConfigError("DDQN actor requires a discrete action space");
  }
  if (c.mode == OffPolicyMode::kSac) {
    if (c.action_space.is_discrete()) throw ConfigError("SAC actor requires a continuous action space");
    if (!(c.initial_alpha > 0.0)) throw ConfigError("initial_alpha must be positive");
  }
}

double clamp_log_std(double raw) { return std::clamp(raw, kLogStdMin, kLogStdMax); }

}  // namespace

std::size_t OffPolicyActor::param_count(const OffPolicyActorConfig& config) {
  const auto q = make_q_spec(config).param_count();
  if (config.mode == OffPolicyMode::kDdqn) return 2 * q;
  return make_policy_spec(config).param_count() + 4 * q + 1;
}

OffPolicyActor::OffPolicyActor(OffPolicyActorConfig config, funcapprox::ParamVector params)
    : config_(std::move(config)) {
  validate(config_);
  q_spec_ = make_q_spec(config_);
  const auto qn = q_spec_.param_count();
  if (config_.mode == OffPolicyMode::kSac) {
    policy_spec_ = make_policy_spec(config_);
    policy_seg_ = {0, policy_spec_.param_count()};
    std::size_t off = policy_seg_.size;
    q_seg_[0] = {off, qn};
    q_seg_[1] = {off + qn, qn};
    q_target_seg_[0] = {off + 2 * qn, qn};
    q_target_seg_[1] = {off + 3 * qn, qn};
    alpha_seg_ = {off + 4 * qn, 1};
  } else {
    q_seg_[0] = {0, qn};
    q_target_seg_[0] = {qn, qn};
  }
  set_params(std::move(params));
}

void OffPolicyActor::set_params(funcapprox::ParamVector params) {
  if (params.size() != param_count(config_)) {
    throw ConfigError("off-policy actor expects " + std::to_string(param_count(config_)) + " parameters, got " +
                      std::to_string(params.size()));
  }
  params_ = std::move(params);
}

Segment OffPolicyActor::q_segment(int which) const {
  if (which < 0 || which > 1 || (which == 1 && mode() == OffPolicyMode::kDdqn)) {
    throw ContractViolation("no such critic");
  }
  return q_seg_[which];
}

Segment OffPolicyActor::q_target_segment(int which) const {
  if (which < 0 || which > 1 || (which == 1 && mode() == OffPolicyMode::kDdqn)) {
    throw ContractViolation("no such target critic");
  }
  return q_target_seg_[which];
}

void OffPolicyActor::require_mode(OffPolicyMode m, const char* what) const {
  if (mode() != m) {
    throw ContractViolation(std::string(what) + " is not available in " +
                            (mode() == OffPolicyMode::kDdqn ? "DDQN" : "SAC") + " mode");
  }
}

void OffPolicyActor::check_obs(const Matrix& obs) const {
  if (static_cast<std::size_t>(obs.cols()) != config_.obs_dim) {
    throw ConfigError("observation width " + std::to_string(obs.cols()) + " does not match actor obs_dim " +
                      std::to_string(config_.obs_dim));
  }
  if (!obs.allFinite()) throw NumericFault("non-finite observation passed to actor");
}

double OffPolicyActor::log_alpha() const {
  require_mode(OffPolicyMode::kSac, "log_alpha");
  return params_.values[alpha_seg_.offset];
}

SquashedSample OffPolicyActor::sample_squashed(const Matrix& obs, bool deterministic, Rng& rng) const {
  Matrix noise = Matrix::Zero(obs.rows(), static_cast<Eigen::Index>(action_dim()));
  if (!deterministic) {
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.normal();
  }
  return sample_squashed(obs, noise);
}

SquashedSample OffPolicyActor::sample_squashed(const Matrix& obs, const Matrix& noise) const {
  require_mode(OffPolicyMode::kSac, "sample_squashed");
  check_obs(obs);
  const auto d = static_cast<Eigen::Index>(action_dim());
  if (noise.rows() != obs.rows() || noise.cols() != d) throw ConfigError("noise shape mismatch");
  const Matrix out = funcapprox::mlp_forward_batch(policy_spec_, block(policy_seg_), obs);
  SquashedSample s;
  s.noise = noise;
  s.actions.resize(obs.rows(), d);
  s.log_probs.assign(static_cast<std::size_t>(obs.rows()), 0.0);
  for (Eigen::Index b = 0; b < obs.rows(); ++b) {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double ls = clamp_log_std(out(b, d + j));
      const double xi = noise(b, j);
      const double u = out(b, j) + std::exp(ls) * xi;
      const double a = std::tanh(u);
      s.actions(b, j) = a;
      lp += -0.5 * xi * xi - ls - 0.5 * kLogTwoPi - std::log(1.0 - a * a + kSquashEpsilon);
    }
    s.log_probs[static_cast<std::size_t>(b)] = lp;
  }
  return s;
}

std::vector<double> OffPolicyActor::squashed_backward(const Matrix& obs, const Matrix& noise,
                                                      std::span<const double> dlogp, const Matrix& daction) const {
  require_mode(OffPolicyMode::kSac, "squashed_backward");
  check_obs(obs);
  const auto d = static_cast<Eigen::Index>(action_dim());
  auto bp = funcapprox::mlp_forward_backward(policy_spec_, block(policy_seg_), obs, [&](const Matrix& out) -> Matrix {
    Matrix g = Matrix::Zero(out.rows(), out.cols());
    for (Eigen::Index b = 0; b < out.rows(); ++b) {
      const double dl = dlogp[static_cast<std::size_t>(b)];
      for (Eigen::Index j = 0; j < d; ++j) {
        const double raw = out(b, d + j);
        const double ls = clamp_log_std(raw);
        const double sigma = std::exp(ls);
        const double xi = noise(b, j);
        const double a = std::tanh(out(b, j) + sigma * xi);
        const double one_minus = 1.0 - a * a;
        const double du = daction(b, j) * one_minus + dl * (2.0 * a * one_minus / (one_minus + kSquashEpsilon));
        g(b, j) = du;
        const bool inside = raw > kLogStdMin && raw < kLogStdMax;
        g(b, d + j) = inside ? du * sigma * xi - dl : 0.0;
      }
    }
    return g;
  });
  return std::move(bp.param_grad);
}

Matrix OffPolicyActor::critic_input(const Matrix& obs, const Matrix& actions) const {
  check_obs(obs);
  if (actions.rows() != obs.rows() || static_cast<std::size_t>(actions.cols()) != action_dim()) {
    throw ConfigError("critic action batch shape mismatch");
  }
  Matrix x(obs.rows(), obs.cols() + actions.cols());
  x << obs, actions;
  return x;
}

std::pair<std::vector<double>, std::vector<double>> OffPolicyActor::q_values(const Matrix& obs,
                                                                             const Matrix& actions) const {
  require_mode(OffPolicyMode::kSac, "twin-critic q_values");
  const Matrix x = critic_input(obs, actions);
  const Matrix q1 = funcapprox::mlp_forward_batch(q_spec_, block(q_seg_[0]), x);
  const Matrix q2 = funcapprox::mlp_forward_batch(q_spec_, block(q_seg_[1]), x);
  return {{q1.data(), q1.data() + q1.size()}, {q2.data(), q2.data() + q2.size()}};
}

std::pair<std::vector<double>, std::vector<double>> OffPolicyActor::target_q_values(const Matrix& obs,
                                                                                    const Matrix& actions) const {
  require_mode(OffPolicyMode::kSac, "twin-critic target_q_values");
  const Matrix x = critic_input(obs, actions);
  const Matrix q1 = funcapprox::mlp_forward_batch(q_spec_, block(q_target_seg_[0]), x);
  const Matrix q2 = funcapprox::mlp_forward_batch(q_spec_, block(q_target_seg_[1]), x);
  return {{q1.data(), q1.data() + q1.size()}, {q2.data(), q2.data() + q2.size()}};
}

CriticBackward OffPolicyActor::q_backward(int which, const Matrix& obs, const Matrix& actions,
                                          std::span<const double> upstream) const {
  require_mode(OffPolicyMode::kSac, "twin-critic q_backward");
  const Matrix x = critic_input(obs, actions);
  if (upstream.size() != static_cast<std::size_t>(obs.rows())) throw ConfigError("upstream batch size mismatch");
  auto bp = funcapprox::mlp_forward_backward(q_spec_, block(q_segment(which)), x, [&](const Matrix& out) -> Matrix {
    Matrix g(out.rows(), 1);
    for (Eigen::Index b = 0; b < out.rows(); ++b) g(b, 0) = upstream[static_cast<std::size_t>(b)];
    return g;
  });
  CriticBackward cb;
  cb.q.assign(bp.output.data(), bp.output.data() + bp.output.size());
  cb.param_grad = std::move(bp.param_grad);
  cb.action_grad = bp.input_grad.rightCols(actions.cols());
  return cb;
}

Matrix OffPolicyActor::q_all(const Matrix& obs) const {
  require_mode(OffPolicyMode::kDdqn, "q_all");
  check_obs(obs);
  return funcapprox::mlp_forward_batch(q_spec_, block(q_seg_[0]), obs);
}

Matrix OffPolicyActor::q_all_target(const Matrix& obs) const {
  require_mode(OffPolicyMode::kDdqn, "q_all_target");
  check_obs(obs);
  return funcapprox::mlp_forward_batch(q_spec_, block(q_target_seg_[0]), obs);
}

std::vector<double> OffPolicyActor::q_all_backward(const Matrix& obs, const Matrix& upstream) const {
  require_mode(OffPolicyMode::kDdqn, "q_all_backward");
  check_obs(obs);
  auto bp = funcapprox::mlp_forward_backward(q_spec_, block(q_seg_[0]), obs,
                                             [&](const Matrix&) -> Matrix { return upstream; });
  return std::move(bp.param_grad);
}

std::vector<std::size_t> OffPolicyActor::greedy_actions(const Matrix& obs) const {
  const Matrix q = q_all(obs);
  std::vector<std::size_t> out(static_cast<std::size_t>(q.rows()));
  for (Eigen::Index b = 0; b < q.rows(); ++b) {
    Eigen::Index best = 0;
    q.row(b).maxCoeff(&best);
    out[static_cast<std::size_t>(b)] = static_cast<std::size_t>(best);
  }
  return out;
}

OffPolicyActorFactory::OffPolicyActorFactory(OffPolicyActorConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  validate(config_);
}

OffPolicyActor OffPolicyActorFactory::operator()() const {
  Rng rng(derive_seed(seed_, 0x0FF011));
  const double gain = funcapprox::default_gain(config_.activation);
  const auto q_spec = make_q_spec(config_);
  funcapprox::ParamVector p;
  p.values.reserve(OffPolicyActor::param_count(config_));
  auto append = [&](const std::vector<double>& v) { p.values.insert(p.values.end(), v.begin(), v.end()); };
  if (config_.mode == OffPolicyMode::kSac) {
    append(funcapprox::orthogonal_init(make_policy_spec(config_), gain, 0.01, rng));
    const auto q1 = funcapprox::orthogonal_init(q_spec, gain, 1.0, rng);
    const auto q2 = funcapprox::orthogonal_init(q_spec, gain, 1.0, rng);
    append(q1);
    append(q2);
    append(q1);
    append(q2);
    p.values.push_back(std::log(config_.initial_alpha));
  } else {
    const auto q = funcapprox::orthogonal_init(q_spec, gain, 1.0, rng);
    append(q);
    append(q);
  }
  return OffPolicyActor(config_, std::move(p));
}

OffPolicyActorFactory create_factory(const OffPolicyActorConfig& config, std::uint64_t seed) {
  return OffPolicyActorFactory(config, seed);
}

std::vector<double> scale_action(std::span<const double> squashed, const envs::ActionSpace& space) {
  std::vector<double> out(squashed.size());
  for (std::size_t j = 0; j < squashed.size(); ++j) {
    const double a = std::clamp(squashed[j], -1.0, 1.0);
    out[j] = space.low[j] + 0.5 * (a + 1.0) * (space.high[j] - space.low[j]);
    out[j] = std::clamp(out[j], space.low[j], space.high[j]);
  }
  return out;
}

}  // namespace modrl::actors
