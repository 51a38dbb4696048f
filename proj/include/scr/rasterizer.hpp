#pragma once

#include <cstdint>
#include <span>
#include <Eigen/Core>

#include "scr/image.hpp"
#include "scr/stroke.hpp"

namespace scr {

inline constexpr int kCanvasSize = 256;
inline constexpr int kDownsampleFactor = kCanvasSize / kImageSize;
inline constexpr int kDefaultSteps = 512;

/// 256x256 binary ink mask, values 0 or 1. Pixel (i, j) sits at canvas
/// coordinate (x = j, y = i).
using Canvas = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Canvas blank_canvas();

/// Number of curve samples taken; at least 2.
class StepCount {
 public:
  explicit StepCount(int value = kDefaultSteps);
  int value() const { return value_; }

 private:
  int value_;
};

/// Sets every pixel with (i - y)^2 + (j - x)^2 <= w^2 to 1.
void stamp_disc(Canvas& canvas, const CanvasPoint& center);

/// Stamps discs at t = i / T for i in [0, T). t = 1 is never sampled.
Canvas rasterize_canvas(const WQBCParams& c, StepCount steps = StepCount{});

/// 4x4 box average down to 64x64; outputs are multiples of 1/16.
GrayImage downsample(const Canvas& canvas);

GrayImage rasterize_stroke(const WQBCParams& c, StepCount steps = StepCount{});

/// Pixelwise maximum. Throws DomainError on an empty sequence or size mismatch.
GrayImage compose(std::span<const GrayImage> strokes);

/// compose() over the rasterized strokes of a glyph.
GrayImage rasterize_glyph(const StrokeSet& strokes, StepCount steps = StepCount{});

}  // namespace scr
