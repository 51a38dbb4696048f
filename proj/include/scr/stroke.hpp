#pragma once

#include <array>
#include <span>
#include <Eigen/Core>

namespace scr {

inline constexpr int kParamsPerStroke = 9;
inline constexpr int kStrokesPerGlyph = 4;
inline constexpr int kGlyphParams = kParamsPerStroke * kStrokesPerGlyph;

inline constexpr double kCanvasExtent = 255.0;
inline constexpr double kMinRadius = 2.0;
inline constexpr double kMaxRadius = 32.0;

/// Control point in normalized units; every field lies in [0,1].
struct WeightedPoint {
  double x = 0, y = 0, w = 0;
};

/// Control point on the 256 canvas: x, y in [0,255], radius w in [2,32].
struct CanvasPoint {
  double x = 0, y = 0, w = 0;
};

/// Weighted quadratic Bezier curve. Flattened order is
/// (x0, y0, w0, x1, y1, w1, x2, y2, w2) everywhere.
class WQBCParams {
 public:
  using Vector = Eigen::Matrix<double, kParamsPerStroke, 1>;

  WQBCParams() : v_(Vector::Zero()) {}
  WQBCParams(WeightedPoint p0, WeightedPoint p1, WeightedPoint p2);
  /// Throws DomainError if any value lies outside [0,1].
  explicit WQBCParams(const Vector& flat);
  static WQBCParams from_span(std::span<const double> flat);
  static WQBCParams from_span(std::span<const float> flat);

  WeightedPoint point(int k) const { return {v_[3 * k], v_[3 * k + 1], v_[3 * k + 2]}; }
  const Vector& flat() const { return v_; }

  friend bool operator==(const WQBCParams& a, const WQBCParams& b) { return a.v_ == b.v_; }

 private:
  Vector v_;
};

/// A character: exactly four strokes.
using StrokeSet = std::array<WQBCParams, kStrokesPerGlyph>;

StrokeSet stroke_set_from_span(std::span<const double> flat);
StrokeSet stroke_set_from_span(std::span<const float> flat);
Eigen::Matrix<double, kGlyphParams, 1> flatten(const StrokeSet& s);

/// Affine map of normalized ranges onto the canvas ranges.
CanvasPoint denormalize(const WeightedPoint& p);

/// Quadratic Bezier blend of the denormalized control points (x, y and radius).
CanvasPoint eval_curve(const WQBCParams& c, double t);

/// Swaps p0 and p2.
WQBCParams reversed(const WQBCParams& c);

}  // namespace scr
