#include "scr/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scr/errors.hpp"

namespace scr {
namespace {

inline bool inside(int i, int j, const CanvasPoint& c) {
  const double di = i - c.y;
  const double dj = j - c.x;
  return di * di + dj * dj <= c.w * c.w;
}

}  // namespace

Canvas blank_canvas() { return Canvas::Zero(kCanvasSize, kCanvasSize); }

StepCount::StepCount(int value) : value_(value) {
  if (value < 2) throw DomainError("rasterizer: step count must be >= 2, got " + std::to_string(value));
}

void stamp_disc(Canvas& canvas, const CanvasPoint& c) {
  const int n = static_cast<int>(canvas.rows());
  const int i_lo = std::max(0, static_cast<int>(std::floor(c.y - c.w)) - 1);
  const int i_hi = std::min(n - 1, static_cast<int>(std::ceil(c.y + c.w)) + 1);
  for (int i = i_lo; i <= i_hi; ++i) {
    const double di = i - c.y;
    const double rem = c.w * c.w - di * di;
    if (rem < 0) continue;
    const double half = std::sqrt(rem);
    // The sqrt estimate can be off by one ulp; settle both ends on the exact test.
    int j0 = static_cast<int>(std::ceil(c.x - half));
    int j1 = static_cast<int>(std::floor(c.x + half));
    while (inside(i, j0 - 1, c)) --j0;
    while (j0 <= j1 && !inside(i, j0, c)) ++j0;
    while (inside(i, j1 + 1, c)) ++j1;
    while (j1 >= j0 && !inside(i, j1, c)) --j1;
    j0 = std::max(j0, 0);
    j1 = std::min(j1, n - 1);
    if (j0 <= j1) canvas.row(i).segment(j0, j1 - j0 + 1).setConstant(1);
  }
}

Canvas rasterize_canvas(const WQBCParams& c, StepCount steps) {
  Canvas canvas = blank_canvas();
  const int T = steps.value();
  const double dt = 1.0 / T;
  for (int i = 0; i < T; ++i) stamp_disc(canvas, eval_curve(c, i * dt));
  return canvas;
}

GrayImage downsample(const Canvas& canvas) {
  if (canvas.rows() != kCanvasSize || canvas.cols() != kCanvasSize)
    throw DomainError("rasterizer: canvas must be 256x256");
  GrayImage out(kImageSize, kImageSize);
  for (int i = 0; i < kImageSize; ++i)
    for (int j = 0; j < kImageSize; ++j) {
      const int sum = canvas.block<kDownsampleFactor, kDownsampleFactor>(4 * i, 4 * j).cast<int>().sum();
      out(i, j) = static_cast<float>(sum) / 16.0f;
    }
  return out;
}

GrayImage rasterize_stroke(const WQBCParams& c, StepCount steps) { return downsample(rasterize_canvas(c, steps)); }

GrayImage compose(std::span<const GrayImage> strokes) {
  if (strokes.empty()) throw DomainError("rasterizer: compose needs at least one image");
  GrayImage out = strokes.front();
  for (const auto& s : strokes.subspan(1)) {
    if (s.rows() != out.rows() || s.cols() != out.cols())
      throw DomainError("rasterizer: compose size mismatch");
    out = out.max(s);
  }
  return out;
}

GrayImage rasterize_glyph(const StrokeSet& strokes, StepCount steps) {
  std::array<GrayImage, kStrokesPerGlyph> images;
  for (int k = 0; k < kStrokesPerGlyph; ++k) images[k] = rasterize_stroke(strokes[k], steps);
  return compose(images);
}

}  // namespace scr
