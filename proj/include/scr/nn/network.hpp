#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scr/nn/layers.hpp"
#include "scr/nn/tensor.hpp"

namespace scr::nn {

/// A validated layer chain together with the per-sample shape it accepts.
class Network {
 public:
  Network() = default;
  Network(Shape input_shape, std::vector<LayerSpec> layers);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const LayerSpec& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t size() const { return layers_.size(); }
  const Shape& input_shape() const { return shapes_.front(); }
  const Shape& output_shape() const { return shapes_.back(); }
  /// Per-sample shape entering layer i; index size() is the network output.
  const Shape& shape_at(std::size_t i) const { return shapes_.at(i); }

  friend bool operator==(const Network& a, const Network& b) { return a.shapes_ == b.shapes_ && a.layers_ == b.layers_; }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
};

template <typename Scalar>
struct LayerParams {
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;
};

/// Parameters and momentum buffers, one entry per layer (empty tensors for
/// parameterless layers). `version` increments on every update so that a tape
/// recorded against older parameters can be detected.
template <typename Scalar>
struct Weights {
  std::vector<LayerParams<Scalar>> params;
  std::vector<LayerParams<Scalar>> velocity;
  std::uint64_t version = 0;

  bool empty() const { return params.empty(); }
  Eigen::Index parameter_count() const;

  template <typename Other>
  Weights<Other> cast() const {
    Weights<Other> out;
    auto convert = [](const std::vector<LayerParams<Scalar>>& src) {
      std::vector<LayerParams<Other>> dst;
      dst.reserve(src.size());
      for (const auto& p : src) dst.push_back({p.weight.template cast<Other>(), p.bias.template cast<Other>()});
      return dst;
    };
    out.params = convert(params);
    out.velocity = convert(velocity);
    out.version = version;
    return out;
  }
};

template <typename Scalar>
using Gradients = std::vector<LayerParams<Scalar>>;

/// Activation record of one forward pass.
template <typename Scalar>
struct Tape {
  std::vector<Tensor<Scalar>> inputs;        // input of each layer
  std::vector<Tensor<Scalar>> outputs;       // kept for sigmoid layers only
  std::vector<std::vector<Eigen::Index>> argmax;  // maxpool routing
  const void* weights_identity = nullptr;
  std::uint64_t weights_version = 0;
  std::size_t layer_count = 0;
};

/// A layer chain with its float parameters.
struct Model {
  Network net;
  Weights<float> weights;
};

/// Rows `indices` of a batch tensor, in order.
template <typename Scalar>
Tensor<Scalar> gather(const Tensor<Scalar>& batch, std::span<const int> indices);

/// Throws StructuralError unless `weights` was built for `net`.
template <typename Scalar>
void check_compatible(const Network& net, const Weights<Scalar>& weights);

/// Batched forward pass; input is [N, ...input_shape]. Records into `tape` when given.
template <typename Scalar>
Tensor<Scalar> forward(const Network& net, const Weights<Scalar>& weights, const Tensor<Scalar>& input,
                       Tape<Scalar>* tape = nullptr);

/// Reverse pass over a recorded tape. Writes parameter gradients into `grads`
/// unless it is null (frozen parameters) and returns the input gradient.
template <typename Scalar>
Tensor<Scalar> backward(const Network& net, const Weights<Scalar>& weights, const Tape<Scalar>& tape,
                        const Tensor<Scalar>& output_gradient, Gradients<Scalar>* grads);

/// Uniform in [-sqrt(6 / fan_in), +sqrt(6 / fan_in)], zero biases, zero velocity.
template <typename Scalar>
Weights<Scalar> init_weights(const Network& net, std::uint64_t seed);

/// FNV-1a over the raw parameter bytes.
std::uint64_t checksum(const Weights<float>& weights);

}  // namespace scr::nn
