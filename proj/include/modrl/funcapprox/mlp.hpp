#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "modrl/common/rng.hpp"
#include "modrl/common/types.hpp"

namespace modrl::funcapprox {

enum class Activation { kTanh, kRelu };
enum class OutputActivation { kNone, kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Fully connected network description. Parameters are laid out layer by
// layer as [W (fan_out x fan_in, row-major) | b (fan_out)].
struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_layers;
  std::size_t output_dim = 1;
  Activation activation = Activation::kTanh;
  OutputActivation output_activation = OutputActivation::kNone;

  // input_dim, hidden..., output_dim
  std::vector<std::size_t> layer_dims() const;
  std::size_t num_layers() const { return hidden_layers.size() + 1; }
  std::size_t param_count() const;
  // Throws ConfigError when any dimension is zero.
  void validate() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

struct ParamVector {
  std::vector<double> values;
  Version version = 0;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

struct Gradient {
  std::vector<double> values;
  Version computed_with_version = 0;
  Version data_collected_with_version = 0;

  std::size_t size() const { return values.size(); }
};

std::vector<double> mlp_forward(const MlpSpec& spec, std::span<const double> params,
                                std::span<const double> input);
Matrix mlp_forward_batch(const MlpSpec& spec, std::span<const double> params, const Matrix& inputs);

struct Backprop {
  Matrix output;
  std::vector<double> param_grad;  // dL/dparams, length spec.param_count()
  Matrix input_grad;               // dL/dinputs, same shape as inputs
};

// Receives the network output and returns dL/doutput for the scalar loss L.
using UpstreamFn = std::function<Matrix(const Matrix& output)>;

// Forward and reverse pass in one call; activations never outlive it.
Backprop mlp_forward_backward(const MlpSpec& spec, std::span<const double> params, const Matrix& inputs,
                              const UpstreamFn& upstream);

// Gradient of mean_b <upstream_b, f(input_b)> with respect to the parameters.
Gradient mlp_backward(const MlpSpec& spec, const ParamVector& params, const Matrix& inputs,
                      const Matrix& upstream);

double default_gain(Activation a);

// Orthogonal weights scaled by hidden_gain (output layer: output_gain),
// zero biases.
std::vector<double> orthogonal_init(const MlpSpec& spec, double hidden_gain, double output_gain, Rng& rng);

}  // namespace modrl::funcapprox

namespace modrl::funcapprox {

// FNV-1a over the raw bytes of the values; equal hashes for bit-equal vectors.
std::uint64_t hash_params(std::span<const double> values);

// A contiguous block of a flat parameter vector.
struct Segment {
  std::size_t offset = 0;
  std::size_t size = 0;

  std::span<const double> of(std::span<const double> v) const { return v.subspan(offset, size); }
  std::span<double> of(std::span<double> v) const { return v.subspan(offset, size); }
};

}  // namespace modrl::funcapprox
