#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>
#include <Eigen/Core>

#include "scr/image.hpp"
#include "scr/rng.hpp"

namespace scr::augment {

struct Range {
  double lo = 0, hi = 0;
  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Pipeline stages in application order.
enum class Stage {
  rotation,
  crop_pad,
  gaussian_noise,
  blur,
  sharpen_emboss,
  salt_pepper,
  perspective,
  piecewise_affine,
};
inline constexpr int kStageCount = 8;
std::string to_string(Stage s);

struct AugmentationConfig {
  Range rotation_deg{-15, 15};
  Range crop_keep_frac{0.60, 0.90};
  Range gaussian_sigma{0, 0.05};
  Range blur_gaussian_sigma{0, 3};
  Range blur_median_r{3, 9};   // odd sizes only
  Range blur_average_r{2, 7};  // integer sizes
  Range sharpen_alpha{0, 1.0};
  Range sharpen_lightness{0.75, 1.5};
  Range emboss_alpha{0, 1.0};
  Range emboss_strength{0, 2.0};
  Range snr_s{0.7, 0.97};
  Range perspective_scale{0.01, 0.1};
  Range piecewise_affine_scale{0.01, 0.05};
  std::array<double, kStageCount> stage_probability{0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};

  double probability(Stage s) const { return stage_probability[static_cast<int>(s)]; }

  /// Every stage disabled.
  static AugmentationConfig none();
  void validate() const;
};

/// `key = value` view of the config. Ranges are written as "lo hi"; stage
/// probabilities use the keys p_<stage>.
std::vector<std::pair<std::string, std::string>> to_settings(const AugmentationConfig& cfg);
/// Returns false for keys that do not belong to the augmentation config.
bool apply_setting(AugmentationConfig& cfg, const std::string& key, const std::string& value);

// ---------------------------------------------------------------------------
// Geometry. Each transform is an inverse map: output pixel -> source position.

using Point = Eigen::Vector2d;  // (x = column, y = row)

struct CropWindow {
  double x0 = 0, y0 = 0, keep = 1;
};

/// Output corners map onto displaced source corners.
struct PerspectiveMap {
  Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();
};

/// 4x4 control grid; `source` holds the jittered positions row by row.
struct PiecewiseAffineMap {
  int rows = 64, cols = 64;
  std::array<Point, 16> source;
};

/// Bilinear resampling through an inverse map. Reads outside the image are 0.
GrayImage warp(const GrayImage& img, const std::function<Point(const Point&)>& inverse_map);

Point rotation_source(const GrayImage& img, double angle_deg, const Point& dst);

GrayImage rotate(const GrayImage& img, double angle_deg);
GrayImage crop_window(const GrayImage& img, const CropWindow& window);
GrayImage apply_perspective(const GrayImage& img, const PerspectiveMap& map);
GrayImage apply_piecewise_affine(const GrayImage& img, const PiecewiseAffineMap& map);

CropWindow sample_crop(int rows, int cols, double keep_frac, Rng& rng);
PerspectiveMap sample_perspective(int rows, int cols, double scale, Rng& rng);
PiecewiseAffineMap sample_piecewise_affine(int rows, int cols, double scale, Rng& rng);

Point map_point(const CropWindow& w, const Point& dst);
Point map_point(const PerspectiveMap& m, const Point& dst);
Point map_point(const PiecewiseAffineMap& m, const Point& dst);

/// Random-position crop of a keep_frac square window, resized back.
GrayImage crop_pad(const GrayImage& img, double keep_frac, Rng& rng);
GrayImage perspective(const GrayImage& img, double scale, Rng& rng);
GrayImage piecewise_affine(const GrayImage& img, double scale, Rng& rng);

// ---------------------------------------------------------------------------
// Photometric filters. Convolutions clamp to the edge; outputs are clamped to [0,1].

/// Median of each r x r neighbourhood; r must be odd.
GrayImage median_filter(const GrayImage& img, int r);
/// Separable Gaussian, radius ceil(3 sigma); sigma = 0 is the identity.
GrayImage gaussian_blur(const GrayImage& img, double sigma);
/// r x r box mean (for even r the window is offset towards the top-left).
GrayImage average_blur(const GrayImage& img, int r);
GrayImage sharpen(const GrayImage& img, double alpha, double lightness);
GrayImage emboss(const GrayImage& img, double alpha, double strength);

/// 3x3 correlation with clamp-to-edge borders (no output clamp).
GrayImage filter3x3(const GrayImage& img, const Eigen::Matrix3d& kernel);

GrayImage gaussian_noise(const GrayImage& img, double sigma, Rng& rng);
RgbImage gaussian_noise(const RgbImage& img, double sigma, Rng& rng);
/// Each pixel is replaced with probability 1 - s, by 0 or 1 with equal odds.
/// Colour images replace all channels of a pixel together.
GrayImage salt_pepper(const GrayImage& img, double s, Rng& rng);
RgbImage salt_pepper(const RgbImage& img, double s, Rng& rng);

// ---------------------------------------------------------------------------

struct AppliedOp {
  Stage stage;
  std::string variant;
  std::vector<std::pair<std::string, double>> params;
};
std::string to_string(const AppliedOp& op);

/// Geometric stages that ran, in order; replaying them maps any image exactly
/// as the ground truth was mapped.
struct GeometricTrace {
  std::optional<double> rotation_deg;
  std::optional<CropWindow> crop;
  std::optional<PerspectiveMap> perspective;
  std::optional<PiecewiseAffineMap> piecewise;

  GrayImage apply(const GrayImage& img) const;
};

struct AugmentedPair {
  RgbImage distorted;
  GrayImage ground_truth;
  std::vector<AppliedOp> applied_ops;
  GeometricTrace geometry;
};

/// Runs every stage with its own probability. Geometric stages act on both the
/// colourised image and the ground-truth mask with the same sampled parameters;
/// photometric stages act on the colourised image only.
AugmentedPair augment_pair(const GrayImage& ground_truth, const RgbImage& colorized, const AugmentationConfig& cfg,
                           Rng& rng);

}  // namespace scr::augment
