#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "icesar/nn/tensor.hpp"

namespace icesar::nn {

// Layers hold indices into Network::params; they carry no mutable state, so a
// Network is a plain value that copies and compares like one.

/// 3x3 convolution, stride 1, zero "same" padding. Weights [out][in][3][3].
struct Conv2d {
  std::size_t in_ch = 0, out_ch = 0;
  std::size_t weight = 0, bias = 0;
  bool operator==(const Conv2d&) const = default;
};
struct Relu {
  bool operator==(const Relu&) const = default;
};
/// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
struct MaxPool2 {
  bool operator==(const MaxPool2&) const = default;
};
/// Inverted dropout: kept units are scaled by 1/(1-rate) during training.
struct Dropout {
  double rate = 0.0;
  bool operator==(const Dropout&) const = default;
};
struct Flatten {
  bool operator==(const Flatten&) const = default;
};
/// y = W x + b with W [out][in].
struct Dense {
  std::size_t in = 0, out = 0;
  std::size_t weight = 0, bias = 0;
  bool operator==(const Dense&) const = default;
};
struct Sigmoid {
  bool operator==(const Sigmoid&) const = default;
};
/// Nearest-neighbour upsampling to (out_h, out_w); twice the input size when
/// those are zero. An explicit size undoes the floor of an odd-sized pool.
struct Upsample2 {
  std::size_t out_h = 0, out_w = 0;
  bool operator==(const Upsample2&) const = default;
};

using Layer = std::variant<Conv2d, Relu, MaxPool2, Dropout, Flatten, Dense, Sigmoid, Upsample2>;

std::string layer_name(const Layer& layer);

struct AdamState {
  std::vector<Tensor> m, v;
  std::uint64_t step = 0;
  bool operator==(const AdamState&) const = default;
};

struct Network {
  Shape input;  // per-sample shape {channels, height, width}
  std::vector<Layer> layers;
  std::vector<Tensor> params;
  AdamState adam;

  /// Per-sample output shape; throws DimensionError when layers do not chain.
  Shape output_shape() const;
  std::size_t parameter_count() const;
  void reset_optimizer();
  bool operator==(const Network&) const = default;
};

/// Architecture knobs for the reference classifier and its autoencoder.
struct ArchSpec {
  std::size_t input_ch = 3;
  std::size_t height = 75;
  std::size_t width = 75;
  std::array<std::size_t, 3> conv_channels{16, 32, 64};
  std::size_t dense_units = 64;
  double dropout = 0.3;

  static ArchSpec reference(std::size_t input_ch) { return ArchSpec{input_ch}; }
  /// Small 16x16 variant used for finite-difference gradient checks.
  static ArchSpec tiny(std::size_t input_ch);
};

/// [conv, relu, pool] x 3 -> flatten -> dropout -> dense, relu -> dropout ->
/// dense 1 -> sigmoid. He-uniform weights, zero biases, deterministic per seed.
Network build_classifier(const ArchSpec& spec, std::uint64_t seed);
Network build_classifier(std::size_t input_ch, std::uint64_t seed);

/// Encoder: the classifier's three conv blocks. Decoder: three
/// [upsample, conv] blocks mirroring them, ending in a linear conv back to
/// input_ch channels. Output shape equals input shape.
Network build_autoencoder(const ArchSpec& spec, std::uint64_t seed);
Network build_autoencoder(std::size_t input_ch, std::uint64_t seed);

/// Copies the autoencoder's encoder convolutions into the classifier's conv
/// trunk. The dense head keeps its initialization; optimizer state is reset.
/// Throws DimensionError (leaving `clf` untouched) when shapes differ.
Network transfer_encoder(const Network& ae, const Network& clf);

/// Indices (into Network::layers) of the Conv2d layers, in order.
std::vector<std::size_t> conv_layers(const Network& net);

struct LayerCache {
  Tensor input;
  std::vector<std::uint32_t> argmax;  // MaxPool2
  std::vector<double> mask;           // Dropout scale per element
};

struct ForwardTrace {
  std::vector<LayerCache> layers;
};

/// Batch forward pass; `batch` is [N, C, H, W]. Dropout is active only when
/// `training`, with masks drawn from `rng_seed`. Fills `trace` when given.
Tensor forward(const Network& net, const Tensor& batch, bool training, std::uint64_t rng_seed,
               ForwardTrace* trace = nullptr);

struct BackwardOptions {
  // Mutation hook for verifying the gradient checker: back-propagates
  // through spatially flipped conv kernels.
  bool corrupt_conv_input_gradient = false;
};

/// Back-propagates `grad_output` (gradient of the loss w.r.t. the output of
/// layer `end_layer - 1`) down to the input. Returns one gradient per param.
std::vector<Tensor> backward(const Network& net, const ForwardTrace& trace, Tensor grad_output,
                             std::size_t end_layer, const BackwardOptions& options = {});

struct LossAndGrad {
  double loss = 0.0;
  Tensor output;
  std::vector<Tensor> grads;
};

/// Mean logloss of a network ending in Sigmoid and its gradient. The sigmoid
/// and the loss are differentiated together: dL/dz = (p - y) / N.
LossAndGrad logloss_gradients(const Network& net, const Tensor& batch, std::span<const int> y, bool training,
                              std::uint64_t rng_seed, const BackwardOptions& options = {});

/// Mean squared error against `target` and its gradient.
LossAndGrad mse_gradients(const Network& net, const Tensor& batch, const Tensor& target, bool training,
                          std::uint64_t rng_seed, const BackwardOptions& options = {});

double loss_mse(std::span<const double> output, std::span<const double> target);

}  // namespace icesar::nn
