#include "scr/stroke.hpp"

#include <string>

#include "scr/errors.hpp"

namespace scr {
namespace {

void check_unit(double v, int index) {
  if (!(v >= 0.0 && v <= 1.0))
    throw DomainError("stroke: parameter " + std::to_string(index) + " = " + std::to_string(v) +
                      " outside [0,1]");
}

template <typename T>
StrokeSet stroke_set_from(std::span<const T> flat) {
  if (flat.size() != static_cast<std::size_t>(kGlyphParams))
    throw DomainError("stroke: a stroke set needs 36 parameters, got " + std::to_string(flat.size()));
  StrokeSet s;
  for (int k = 0; k < kStrokesPerGlyph; ++k) s[k] = WQBCParams::from_span(flat.subspan(k * 9, 9));
  return s;
}

}  // namespace

WQBCParams::WQBCParams(WeightedPoint p0, WeightedPoint p1, WeightedPoint p2) {
  v_ << p0.x, p0.y, p0.w, p1.x, p1.y, p1.w, p2.x, p2.y, p2.w;
  for (int i = 0; i < kParamsPerStroke; ++i) check_unit(v_[i], i);
}

WQBCParams::WQBCParams(const Vector& flat) : v_(flat) {
  for (int i = 0; i < kParamsPerStroke; ++i) check_unit(v_[i], i);
}

WQBCParams WQBCParams::from_span(std::span<const double> flat) {
  if (flat.size() != static_cast<std::size_t>(kParamsPerStroke))
    throw DomainError("stroke: a stroke needs 9 parameters, got " + std::to_string(flat.size()));
  return WQBCParams(Vector(Eigen::Map<const Vector>(flat.data())));
}

WQBCParams WQBCParams::from_span(std::span<const float> flat) {
  if (flat.size() != static_cast<std::size_t>(kParamsPerStroke))
    throw DomainError("stroke: a stroke needs 9 parameters, got " + std::to_string(flat.size()));
  return WQBCParams(Vector(Eigen::Map<const Eigen::Matrix<float, 9, 1>>(flat.data()).cast<double>()));
}

StrokeSet stroke_set_from_span(std::span<const double> flat) { return stroke_set_from(flat); }
StrokeSet stroke_set_from_span(std::span<const float> flat) { return stroke_set_from(flat); }

Eigen::Matrix<double, kGlyphParams, 1> flatten(const StrokeSet& s) {
  Eigen::Matrix<double, kGlyphParams, 1> out;
  for (int k = 0; k < kStrokesPerGlyph; ++k) out.segment<9>(9 * k) = s[k].flat();
  return out;
}

CanvasPoint denormalize(const WeightedPoint& p) {
  check_unit(p.x, 0);
  check_unit(p.y, 1);
  check_unit(p.w, 2);
  return {kCanvasExtent * p.x, kCanvasExtent * p.y, kMinRadius + (kMaxRadius - kMinRadius) * p.w};
}

CanvasPoint eval_curve(const WQBCParams& c, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("stroke: t = " + std::to_string(t) + " outside [0,1]");
  const CanvasPoint a = denormalize(c.point(0));
  const CanvasPoint b = denormalize(c.point(1));
  const CanvasPoint d = denormalize(c.point(2));
  const double u = 1.0 - t;
  const double k0 = u * u, k1 = 2.0 * t * u, k2 = t * t;
  return {k0 * a.x + k1 * b.x + k2 * d.x, k0 * a.y + k1 * b.y + k2 * d.y, k0 * a.w + k1 * b.w + k2 * d.w};
}

WQBCParams reversed(const WQBCParams& c) { return WQBCParams(c.point(2), c.point(1), c.point(0)); }

}  // namespace scr
