#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "modrl/common/errors.hpp"
#include "modrl/funcapprox/checkpoint.hpp"
#include "modrl/funcapprox/mlp.hpp"
#include "modrl/funcapprox/optim.hpp"
#include "support/oracles.hpp"

using namespace modrl;
using namespace modrl::funcapprox;
using modrl::testing::max_rel_err;
using modrl::testing::numeric_gradient;
using modrl::testing::random_matrix;
using modrl::testing::random_vector;

namespace {

// Plain per-layer matrix products, written independently of the library.
std::vector<double> oracle_forward(const MlpSpec& spec, const std::vector<double>& p, std::vector<double> x) {
  const auto dims = spec.layer_dims();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = dims[l], out = dims[l + 1];
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      double s = p[off + out * in + o];
      for (std::size_t i = 0; i < in; ++i) s += p[off + o * in + i] * x[i];
      const bool last = l + 2 == dims.size();
      if (!last) {
        s = spec.activation == Activation::kTanh ? std::tanh(s) : std::max(0.0, s);
      } else if (spec.output_activation == OutputActivation::kTanh) {
        s = std::tanh(s);
      }
      y[o] = s;
    }
    off += out * in + out;
    x = std::move(y);
  }
  return x;
}

MlpSpec random_spec(Rng& rng) {
  MlpSpec s;
  s.input_dim = 1 + rng.index(5);
  const auto depth = rng.index(3);
  for (std::size_t i = 0; i < depth; ++i) s.hidden_layers.push_back(1 + rng.index(7));
  s.output_dim = 1 + rng.index(3);
  s.activation = rng.uniform() < 0.5 ? Activation::kTanh : Activation::kRelu;
  s.output_activation = rng.uniform() < 0.3 ? OutputActivation::kTanh : OutputActivation::kNone;
  return s;
}

}  // namespace

TEST(MlpSpec, ParamCountFormula) {
  MlpSpec s{4, {8}, 2};
  EXPECT_EQ(s.param_count(), (4u + 1) * 8 + (8u + 1) * 2);
  EXPECT_THROW((MlpSpec{0, {}, 1}.validate()), ConfigError);
  EXPECT_THROW((MlpSpec{1, {0}, 1}.validate()), ConfigError);
}

TEST(MlpForward, ZeroWeightsGiveBias) {
  MlpSpec s{3, {}, 2};
  std::vector<double> p(s.param_count(), 0.0);
  p[6] = 0.7;
  p[7] = -1.2;
  const auto y = mlp_forward(s, p, std::vector<double>{5, -3, 2});
  EXPECT_EQ(y, (std::vector<double>{0.7, -1.2}));
}

TEST(MlpForward, IdentityLayer) {
  MlpSpec s{3, {}, 3};
  std::vector<double> p(s.param_count(), 0.0);
  for (int i = 0; i < 3; ++i) p[i * 3 + i] = 1.0;
  const std::vector<double> x{0.25, -4, 9};
  EXPECT_EQ(mlp_forward(s, p, x), x);
}

TEST(MlpForward, MatchesOracle_4_8_2_Tanh) {
  MlpSpec s{4, {8}, 2, Activation::kTanh};
  Rng rng(11);
  const auto p = random_vector(rng, s.param_count());
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_vector(rng, 4);
    const auto y = mlp_forward(s, p, x);
    const auto want = oracle_forward(s, p, x);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], want[i], 1e-12);
  }
}

TEST(MlpForward, BitIdenticalOnRepeat) {
  Rng rng(3);
  MlpSpec s{5, {16, 16}, 3};
  const auto p = random_vector(rng, s.param_count());
  const auto x = random_matrix(rng, 9, 5);
  EXPECT_EQ(mlp_forward_batch(s, p, x), mlp_forward_batch(s, p, x));
}

TEST(MlpForward, DimensionMismatchIsConfigError) {
  MlpSpec s{3, {4}, 1};
  std::vector<double> p(s.param_count());
  EXPECT_THROW(mlp_forward(s, p, std::vector<double>{1, 2}), ConfigError);
  std::vector<double> short_p(s.param_count() - 1);
  EXPECT_THROW(mlp_forward(s, short_p, std::vector<double>{1, 2, 3}), ConfigError);
}

TEST(MlpBackward, LinearClosedForm) {
  MlpSpec s{3, {}, 2};
  Rng rng(5);
  ParamVector p{random_vector(rng, s.param_count()), 4};
  const Matrix x = matrix_from_rows({{1.0, -2.0, 0.5}});
  const Matrix c = matrix_from_rows({{0.3, -0.7}});
  const auto g = mlp_backward(s, p, x, c);
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(g.values[o * 3 + i], c(0, o) * x(0, i));
    EXPECT_DOUBLE_EQ(g.values[6 + o], c(0, o));
  }
  EXPECT_EQ(g.computed_with_version, 4u);
}

TEST(MlpBackward, ZeroUpstreamGivesZero) {
  MlpSpec s{3, {5}, 2};
  Rng rng(6);
  ParamVector p{random_vector(rng, s.param_count())};
  const auto g = mlp_backward(s, p, random_matrix(rng, 4, 3), Matrix::Zero(4, 2));
  for (double v : g.values) EXPECT_EQ(v, 0.0);
}

TEST(MlpBackward, AveragesOverBatch) {
  MlpSpec s{2, {3}, 1};
  Rng rng(8);
  ParamVector p{random_vector(rng, s.param_count())};
  const auto x = random_matrix(rng, 1, 2);
  Matrix x2(2, 2);
  x2 << x, x;
  const auto g1 = mlp_backward(s, p, x, Matrix::Ones(1, 1));
  const auto g2 = mlp_backward(s, p, x2, Matrix::Ones(2, 1));
  for (std::size_t i = 0; i < g1.values.size(); ++i) EXPECT_NEAR(g1.values[i], g2.values[i], 1e-15);
}

TEST(MlpBackward, FiniteDifferences_3_5_1) {
  MlpSpec s{3, {5}, 1, Activation::kTanh};
  Rng rng(12);
  ParamVector p{random_vector(rng, s.param_count())};
  const auto x = random_matrix(rng, 4, 3);
  const auto c = random_matrix(rng, 4, 1);
  const auto loss = [&](const std::vector<double>& v) {
    return (mlp_forward_batch(s, v, x).array() * c.array()).sum() / 4.0;
  };
  const auto g = mlp_backward(s, p, x, c);
  EXPECT_LE(max_rel_err(g.values, numeric_gradient(loss, p.values)), 1e-5);
}

// Property over 100 random nets, including relu and tanh outputs; the loss
// is a fixed random projection of the outputs.
TEST(MlpBackward, FiniteDifferencesRandomNets) {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_spec(rng);
    ParamVector p{random_vector(rng, s.param_count(), 0.7)};
    const auto x = random_matrix(rng, 3, static_cast<Eigen::Index>(s.input_dim));
    const auto c = random_matrix(rng, 3, static_cast<Eigen::Index>(s.output_dim));
    const auto loss = [&](const std::vector<double>& v) {
      return (mlp_forward_batch(s, v, x).array() * c.array()).sum() / 3.0;
    };
    const auto g = mlp_backward(s, p, x, c);
    EXPECT_LE(max_rel_err(g.values, numeric_gradient(loss, p.values, 1e-5)), 1e-5) << "trial " << trial;
  }
}

TEST(MlpBackward, InputGradientMatchesFiniteDifferences) {
  MlpSpec s{3, {6}, 2};
  Rng rng(13);
  const auto p = random_vector(rng, s.param_count());
  const auto x = random_matrix(rng, 2, 3);
  const auto c = random_matrix(rng, 2, 2);
  const auto bp = mlp_forward_backward(s, p, x, [&](const Matrix&) { return c; });
  std::vector<double> flat(x.data(), x.data() + x.size());
  const auto loss = [&](const std::vector<double>& v) {
    Matrix xi = Eigen::Map<const Matrix>(v.data(), 2, 3);
    return (mlp_forward_batch(s, p, xi).array() * c.array()).sum();
  };
  std::vector<double> analytic(bp.input_grad.data(), bp.input_grad.data() + bp.input_grad.size());
  EXPECT_LE(max_rel_err(analytic, numeric_gradient(loss, flat)), 1e-5);
}

TEST(OrthogonalInit, RowsOrthogonalWithGainAndZeroBias) {
  MlpSpec s{8, {6}, 2, Activation::kRelu};
  Rng rng(1);
  const auto p = orthogonal_init(s, std::sqrt(2.0), 0.01, rng);
  ASSERT_EQ(p.size(), s.param_count());
  Eigen::Map<const Matrix> w(p.data(), 6, 8);
  const Matrix gram = w * w.transpose();
  EXPECT_TRUE(gram.isApprox(2.0 * Matrix::Identity(6, 6), 1e-10));
  for (int i = 0; i < 6; ++i) EXPECT_EQ(p[48 + i], 0.0);
  Eigen::Map<const Matrix> w2(p.data() + 54, 2, 6);
  EXPECT_TRUE((w2 * w2.transpose()).isApprox(1e-4 * Matrix::Identity(2, 2), 1e-10));
  Rng again(1);
  EXPECT_EQ(orthogonal_init(s, std::sqrt(2.0), 0.01, again), p);
  EXPECT_DOUBLE_EQ(default_gain(Activation::kTanh), 5.0 / 3.0);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  ParamVector p{{1.0, -2.0, 3.0}, 0};
  auto st = AdamState::zeros(3);
  for (int i = 0; i < 25; ++i) {
    auto [np, ns] = adam_step(p, Gradient{{0, 0, 0}}, st, 1e-3);
    EXPECT_EQ(np.values, p.values);
    EXPECT_EQ(np.version, p.version + 1);
    EXPECT_EQ(ns.step_count, st.step_count + 1);
    p = np;
    st = ns;
  }
}

TEST(Adam, FirstStepIsSignedLr) {
  ParamVector p{{0.5, 0.5, 0.5}, 0};
  const Gradient g{{2.0, -3.0, 1e-3}};
  const double lr = 0.01;
  const auto [np, ns] = adam_step(p, g, AdamState::zeros(3), lr);
  for (int i = 0; i < 3; ++i) {
    const double expected = -lr * g.values[i] / (std::abs(g.values[i]) + 1e-8);
    EXPECT_NEAR(np.values[i] - p.values[i], expected, 1e-15);
    EXPECT_NEAR(np.values[i] - p.values[i], -lr * (g.values[i] > 0 ? 1 : -1), lr * 1e-4);
  }
}

TEST(Adam, TwoStepsMatchOracle) {
  const double lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ParamVector p{{0.1, -0.2}, 0};
  const Gradient g{{0.3, -1.1}};
  auto [p1, s1] = adam_step(p, g, AdamState::zeros(2), lr, b1, b2, eps);
  auto [p2, s2] = adam_step(p1, g, s1, lr, b1, b2, eps);
  for (int i = 0; i < 2; ++i) {
    double x = p.values[i], m = 0, v = 0;
    for (int t = 1; t <= 2; ++t) {
      m = b1 * m + (1 - b1) * g.values[i];
      v = b2 * v + (1 - b2) * g.values[i] * g.values[i];
      const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
      x -= lr * mh / (std::sqrt(vh) + eps);
    }
    EXPECT_NEAR(p2.values[i], x, 1e-12);
  }
  EXPECT_EQ(s2.step_count, 2u);
  EXPECT_EQ(p2.version, 2u);
}

TEST(Adam, NanIsRejected) {
  ParamVector p{{1.0}, 0};
  EXPECT_THROW(adam_step(p, Gradient{{NAN}}, AdamState::zeros(1), 1e-3), NumericFault);
  EXPECT_THROW(adam_step(p, Gradient{{1.0}}, AdamState::zeros(1), 0.0), ConfigError);
}

TEST(Adam, GroupsUseTheirOwnRates) {
  ParamVector p{{0, 0, 0, 0}, 0};
  auto st = AdamState::zeros(4);
  const std::vector<ParamGroup> groups{{0, 2, 0.1}, {2, 1, 0.01}};
  adam_step_grouped(p, Gradient{{1, 1, 1, 1}}, st, groups);
  EXPECT_NEAR(p.values[0], -0.1, 1e-9);
  EXPECT_NEAR(p.values[2], -0.01, 1e-9);
  EXPECT_EQ(p.values[3], 0.0);
  EXPECT_EQ(p.version, 1u);
}

TEST(ClipGradNorm, Examples) {
  const auto small = clip_grad_norm(Gradient{{0.3, 0.0}}, 0.5);
  EXPECT_EQ(small.values, (std::vector<double>{0.3, 0.0}));
  const auto big = clip_grad_norm(Gradient{{3.0, 4.0}}, 0.5);
  EXPECT_NEAR(big.values[0], 0.3, 1e-15);
  EXPECT_NEAR(big.values[1], 0.4, 1e-15);
  EXPECT_NEAR(l2_norm(big.values), 0.5, 1e-15);
  EXPECT_EQ(clip_grad_norm(Gradient{{0.0, 0.0}}, 0.5).values, (std::vector<double>{0.0, 0.0}));
}

TEST(ClipGradNorm, PropertyNormBoundAndDirection) {
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    Gradient g{random_vector(rng, 1 + rng.index(20), std::exp(rng.uniform(-5, 5)))};
    const double max_norm = std::exp(rng.uniform(-3, 3));
    const auto c = clip_grad_norm(g, max_norm);
    EXPECT_LE(l2_norm(c.values), max_norm + 1e-12);
    double dot = 0;
    for (std::size_t i = 0; i < g.values.size(); ++i) dot += g.values[i] * c.values[i];
    EXPECT_NEAR(dot / (l2_norm(g.values) * l2_norm(c.values)), 1.0, 1e-12);
  }
}

TEST(Polyak, Examples) {
  const ParamVector t{{2.0, 0.0}}, s{{0.0, 2.0}};
  EXPECT_EQ(polyak_update(t, s, 0.0).values, s.values);
  EXPECT_EQ(polyak_update(t, s, 1.0).values, t.values);
  EXPECT_EQ(polyak_update(t, s, 0.5).values, (std::vector<double>{1.0, 1.0}));
  EXPECT_THROW(polyak_update(t, ParamVector{{1.0}}, 0.5), ConfigError);
}

TEST(Polyak, ContractsTowardSource) {
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const ParamVector t{random_vector(rng, 6)}, s{random_vector(rng, 6)};
    const double tau = rng.uniform();
    const auto r = polyak_update(t, s, tau);
    std::vector<double> d1(6), d0(6);
    for (int i = 0; i < 6; ++i) {
      d1[i] = r.values[i] - s.values[i];
      d0[i] = t.values[i] - s.values[i];
    }
    EXPECT_NEAR(l2_norm(d1), tau * l2_norm(d0), 1e-12);
  }
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  Rng rng(9);
  ModelCheckpoint c;
  c.networks = {MlpSpec{4, {8}, 2}, MlpSpec{4, {8}, 1, Activation::kRelu, OutputActivation::kTanh}};
  c.params = ParamVector{random_vector(rng, c.networks[0].param_count() + c.networks[1].param_count()), 17};
  c.optimizer = AdamState{random_vector(rng, c.params.size()), random_vector(rng, c.params.size()), 17};
  const auto path = std::filesystem::temp_directory_path() / "modrl_ckpt_test.bin";
  save_model(path, c);
  const auto loaded = load_model(path);
  EXPECT_EQ(loaded, c);
  EXPECT_EQ(encode_model(loaded), encode_model(c));
  auto bytes = read_file(path);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(decode_model(bytes), IntegrityError);
  std::filesystem::remove(path);
}
