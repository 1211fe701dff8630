#include "modrl/scheme/metrics.hpp"

#include "modrl/common/errors.hpp"

namespace modrl::scheme {

LagSummary lag_metrics(std::span<const LagSample> samples) {
  LagSummary s;
  double pl = 0.0, ga = 0.0;
  for (const auto& x : samples) {
    if (x.kind == LagKind::kPolicyLag) {
      pl += static_cast<double>(x.delta);
      ++s.policy_lag_samples;
    } else {
      ga += static_cast<double>(x.delta);
      ++s.grad_async_samples;
    }
  }
  if (s.policy_lag_samples) s.policy_lag = pl / static_cast<double>(s.policy_lag_samples);
  if (s.grad_async_samples) s.grad_async = ga / static_cast<double>(s.grad_async_samples);
  return s;
}

std::vector<LagSample> lag_samples(const funcapprox::Gradient& g, Version applied_at) {
  if (g.data_collected_with_version > g.computed_with_version || g.computed_with_version > applied_at) {
    throw ContractViolation("gradient version tags violate data <= computed <= applied (" +
                            std::to_string(g.data_collected_with_version) + ", " +
                            std::to_string(g.computed_with_version) + ", " + std::to_string(applied_at) + ")");
  }
  return {{LagKind::kPolicyLag, g.computed_with_version - g.data_collected_with_version},
          {LagKind::kGradientAsynchrony, applied_at - g.computed_with_version}};
}

void MetricsSink::add_env_steps(std::uint64_t n) {
  std::lock_guard lock(mu_);
  env_steps_ += n;
}

void MetricsSink::add_update(std::span<const LagSample> lags) {
  std::lock_guard lock(mu_);
  ++updates_;
  window_.lags.insert(window_.lags.end(), lags.begin(), lags.end());
}

void MetricsSink::add_dropped() {
  std::lock_guard lock(mu_);
  ++dropped_;
}

void MetricsSink::add_episodes(std::span<const double> rewards, std::span<const double> successes) {
  std::lock_guard lock(mu_);
  window_.episode_rewards.insert(window_.episode_rewards.end(), rewards.begin(), rewards.end());
  window_.episode_successes.insert(window_.episode_successes.end(), successes.begin(), successes.end());
}

void MetricsSink::add_loss(const algos::LossStats& s) {
  std::lock_guard lock(mu_);
  loss_sum_.total_loss += s.total_loss;
  loss_sum_.policy_loss += s.policy_loss;
  loss_sum_.value_loss += s.value_loss;
  loss_sum_.entropy += s.entropy;
  loss_sum_.clip_fraction += s.clip_fraction;
  loss_sum_.q_loss += s.q_loss;
  loss_sum_.alpha_loss += s.alpha_loss;
  loss_sum_.alpha += s.alpha;
  ++window_.loss_count;
}

void MetricsSink::add_cycle_time(double seconds) {
  std::lock_guard lock(mu_);
  window_.cycle_seconds.push_back(seconds);
}

std::uint64_t MetricsSink::env_steps() const {
  std::lock_guard lock(mu_);
  return env_steps_;
}

std::uint64_t MetricsSink::updates() const {
  std::lock_guard lock(mu_);
  return updates_;
}

void MetricsSink::restore(std::uint64_t env_steps, std::uint64_t updates) {
  std::lock_guard lock(mu_);
  env_steps_ = env_steps;
  updates_ = updates;
}

MetricsWindow MetricsSink::drain() {
  std::lock_guard lock(mu_);
  MetricsWindow w = std::move(window_);
  window_ = MetricsWindow{};
  w.env_steps = env_steps_;
  w.updates = updates_;
  w.dropped_gradients = dropped_;
  if (w.loss_count) {
    const double n = static_cast<double>(w.loss_count);
    w.loss = loss_sum_;
    w.loss.total_loss /= n;
    w.loss.policy_loss /= n;
    w.loss.value_loss /= n;
    w.loss.entropy /= n;
    w.loss.clip_fraction /= n;
    w.loss.q_loss /= n;
    w.loss.alpha_loss /= n;
    w.loss.alpha /= n;
  }
  loss_sum_ = algos::LossStats{};
  return w;
}

}  // namespace modrl::scheme
