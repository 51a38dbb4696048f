#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scr/nn/tensor.hpp"

namespace scr::nn {

/// Tag values are part of the weights file format.
enum class LayerKind : std::uint8_t {
  fully_connected = 1,
  conv3x3 = 2,
  upsample2x = 3,
  maxpool2x2 = 4,
  relu = 5,
  sigmoid = 6,
  reshape = 7,
};

std::string to_string(LayerKind kind);

/// One layer of a chain. `dims` depends on the kind:
///   fully_connected  {out, in}
///   conv3x3          {out_channels, 3, 3, in_channels}   (stride 1, zero padding 1)
///   reshape          target per-sample shape
///   others           {}
struct LayerSpec {
  LayerKind kind;
  Shape dims;

  bool has_parameters() const { return kind == LayerKind::fully_connected || kind == LayerKind::conv3x3; }
  int fan_in() const;
  /// Weight tensor shape; empty for parameterless layers.
  Shape weight_shape() const;
  Shape bias_shape() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline LayerSpec fully_connected(int in, int out) { return {LayerKind::fully_connected, {out, in}}; }
inline LayerSpec conv3x3(int in_channels, int out_channels) {
  return {LayerKind::conv3x3, {out_channels, 3, 3, in_channels}};
}
inline LayerSpec upsample2x() { return {LayerKind::upsample2x, {}}; }
inline LayerSpec maxpool2x2() { return {LayerKind::maxpool2x2, {}}; }
inline LayerSpec relu() { return {LayerKind::relu, {}}; }
inline LayerSpec sigmoid() { return {LayerKind::sigmoid, {}}; }
inline LayerSpec reshape(Shape target) { return {LayerKind::reshape, std::move(target)}; }

/// Per-sample output shape; throws StructuralError when `input` does not fit.
Shape output_shape(const LayerSpec& layer, const Shape& input);

}  // namespace scr::nn
