#pragma once

#include <array>
#include <Eigen/Core>

namespace scr {

inline constexpr int kImageSize = 64;

/// Single-plane raster, rows = height. Values are intensities in [0,1].
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayImage = Plane<float>;

/// Planar RGB image; all planes share one size.
struct RgbImage {
  std::array<GrayImage, 3> planes;

  RgbImage() = default;
  RgbImage(int rows, int cols) {
    for (auto& p : planes) p = GrayImage::Zero(rows, cols);
  }

  int rows() const { return static_cast<int>(planes[0].rows()); }
  int cols() const { return static_cast<int>(planes[0].cols()); }
  GrayImage& operator[](int c) { return planes[c]; }
  const GrayImage& operator[](int c) const { return planes[c]; }

  friend bool operator==(const RgbImage& a, const RgbImage& b) {
    for (int c = 0; c < 3; ++c)
      if (a.planes[c].rows() != b.planes[c].rows() || a.planes[c].cols() != b.planes[c].cols() ||
          !(a.planes[c] == b.planes[c]).all())
        return false;
    return true;
  }
};

using Rgb = std::array<float, 3>;

/// Copies a gray plane into all three channels.
RgbImage replicate(const GrayImage& gray);

/// Channel mean.
GrayImage to_gray(const RgbImage& rgb);

/// Bilinear resize with pixel-centre alignment and edge clamping.
GrayImage resize_bilinear(const GrayImage& img, int rows, int cols);
RgbImage resize_bilinear(const RgbImage& img, int rows, int cols);

/// Intersection-over-union of the masks `a > threshold` and `b > threshold`.
/// Two empty masks have IoU 1.
double iou(const GrayImage& a, const GrayImage& b, float threshold = 0.5f);

/// Number of 4-connected components of `img > threshold`.
int connected_components(const GrayImage& img, float threshold = 0.5f);

inline GrayImage clamp01(const GrayImage& img) { return img.max(0.0f).min(1.0f); }

}  // namespace scr
