#include "modrl/funcapprox/mlp.hpp"

#include <Eigen/QR>

#include <cmath>

#include "modrl/common/errors.hpp"

namespace modrl::funcapprox {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

void check_shapes(const MlpSpec& spec, std::size_t param_len, Eigen::Index input_cols) {
  spec.validate();
  if (param_len != spec.param_count()) {
    throw ConfigError("parameter vector has " + std::to_string(param_len) + " entries, network expects " +
                      std::to_string(spec.param_count()));
  }
  if (static_cast<std::size_t>(input_cols) != spec.input_dim) {
    throw ConfigError("input width " + std::to_string(input_cols) + " does not match network input_dim " +
                      std::to_string(spec.input_dim));
  }
}

void apply_hidden(Activation a, Matrix& z) {
  if (a == Activation::kTanh) {
    z = z.array().tanh();
  } else {
    z = z.array().max(0.0);
  }
}

// Runs the forward pass and records each layer's post-activation output
// (index 0 is the input).
std::vector<Matrix> forward_tape(const MlpSpec& spec, std::span<const double> params, const Matrix& inputs) {
  const auto dims = spec.layer_dims();
  std::vector<Matrix> acts;
  acts.reserve(dims.size());
  acts.push_back(inputs);
  const double* p = params.data();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    ConstMap w(p, out, in);
    ConstVecMap b(p + out * in, out);
    p += out * in + out;
    Matrix z = acts.back() * w.transpose();
    z.rowwise() += b;
    const bool last = l + 2 == dims.size();
    if (!last) {
      apply_hidden(spec.activation, z);
    } else if (spec.output_activation == OutputActivation::kTanh) {
      z = z.array().tanh();
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + name + "' (expected tanh or relu)");
}

std::vector<std::size_t> MlpSpec::layer_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(hidden_layers.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_layers.begin(), hidden_layers.end());
  dims.push_back(output_dim);
  return dims;
}

std::size_t MlpSpec::param_count() const {
  const auto dims = layer_dims();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += (dims[l] + 1) * dims[l + 1];
  return n;
}

void MlpSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw ConfigError("network dimensions must be >= 1");
  for (auto h : hidden_layers) {
    if (h == 0) throw ConfigError("hidden layer width must be >= 1");
  }
}

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input) {
  Matrix x(1, static_cast<Eigen::Index>(input.size()));
  for (std::size_t i = 0; i < input.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = input[i];
  const Matrix y = mlp_forward_batch(spec, params, x);
  return {y.data(), y.data() + y.size()};
}

Matrix mlp_forward_batch(const MlpSpec& spec, std::span<const double> params, const Matrix& inputs) {
  check_shapes(spec, params.size(), inputs.cols());
  auto acts = forward_tape(spec, params, inputs);
  return std::move(acts.back());
}

Backprop mlp_forward_backward(const MlpSpec& spec, std::span<const double> params, const Matrix& inputs,
                              const UpstreamFn& upstream) {
  check_shapes(spec, params.size(), inputs.cols());
  auto acts = forward_tape(spec, params, inputs);
  const auto dims = spec.layer_dims();

  Backprop result;
  result.output = acts.back();
  Matrix delta = upstream(result.output);
  if (delta.rows() != inputs.rows() || static_cast<std::size_t>(delta.cols()) != spec.output_dim) {
    throw ConfigError("upstream gradient shape does not match network output");
  }
  if (spec.output_activation == OutputActivation::kTanh) {
    delta = delta.array() * (1.0 - acts.back().array().square());
  }

  result.param_grad.assign(spec.param_count(), 0.0);
  // Walk layers backwards; offset points at the start of layer l's block.
  std::size_t offset = spec.param_count();
  for (std::size_t l = dims.size() - 1; l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    offset -= static_cast<std::size_t>(out * in + out);
    MutMap gw(result.param_grad.data() + offset, out, in);
    gw.noalias() = delta.transpose() * acts[l];
    Eigen::Map<Eigen::RowVectorXd> gb(result.param_grad.data() + offset + out * in, out);
    gb = delta.colwise().sum();

    ConstMap w(params.data() + offset, out, in);
    Matrix prev = delta * w;
    if (l > 0) {
      if (spec.activation == Activation::kTanh) {
        prev = prev.array() * (1.0 - acts[l].array().square());
      } else {
        prev = prev.array() * (acts[l].array() > 0.0).cast<double>();
      }
    }
    delta = std::move(prev);
  }
  result.input_grad = std::move(delta);
  return result;
}

Gradient mlp_backward(const MlpSpec& spec, const ParamVector& params, const Matrix& inputs,
                      const Matrix& upstream) {
  if (upstream.rows() != inputs.rows()) throw ConfigError("upstream batch size does not match inputs");
  const double scale = inputs.rows() > 0 ? 1.0 / static_cast<double>(inputs.rows()) : 0.0;
  auto bp = mlp_forward_backward(spec, params.values, inputs,
                                 [&](const Matrix&) -> Matrix { return upstream * scale; });
  Gradient g;
  g.values = std::move(bp.param_grad);
  g.computed_with_version = params.version;
  g.data_collected_with_version = params.version;
  return g;
}

double default_gain(Activation a) { return a == Activation::kRelu ? std::sqrt(2.0) : 5.0 / 3.0; }

std::vector<double> orthogonal_init(const MlpSpec& spec, double hidden_gain, double output_gain, Rng& rng) {
  spec.validate();
  const auto dims = spec.layer_dims();
  std::vector<double> params(spec.param_count(), 0.0);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    const auto rows = std::max(in, out);
    const auto cols = std::min(in, out);
    Eigen::MatrixXd gauss(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) gauss(r, c) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(cols, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (r(c, c) < 0.0) q.col(c) *= -1.0;
    }
    const Eigen::MatrixXd w = out >= in ? q : Eigen::MatrixXd(q.transpose());
    const double gain = l + 2 == dims.size() ? output_gain : hidden_gain;
    MutMap dst(params.data() + offset, out, in);
    dst = gain * w;
    offset += static_cast<std::size_t>(out * in + out);
  }
  return params;
}

}  // namespace modrl::funcapprox

namespace modrl::funcapprox {

std::uint64_t hash_params(std::span<const double> values) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace modrl::funcapprox
