#include "scr/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <Eigen/Dense>

#include "scr/errors.hpp"

namespace scr::augment {
namespace {

constexpr std::array<const char*, kStageCount> kStageNames = {
    "rotation", "crop_pad", "gaussian_noise", "blur", "sharpen_emboss", "salt_pepper", "perspective", "piecewise_affine"};

float bilinear(const GrayImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0, fy = y - y0;
  auto at = [&](int r, int c) -> double {
    return (r < 0 || r >= img.rows() || c < 0 || c >= img.cols()) ? 0.0 : img(r, c);
  };
  const double top = fx == 0 ? at(y0, x0) : (1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1);
  if (fy == 0) return static_cast<float>(top);
  const double bottom = fx == 0 ? at(y0 + 1, x0) : (1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1);
  return static_cast<float>((1 - fy) * top + fy * bottom);
}

inline float pixel_clamped(const GrayImage& img, int r, int c) {
  return img(std::clamp(r, 0, static_cast<int>(img.rows()) - 1), std::clamp(c, 0, static_cast<int>(img.cols()) - 1));
}

/// Separable correlation with a 1-D kernel centred at `anchor`.
GrayImage separable(const GrayImage& img, const std::vector<double>& k, int anchor) {
  const int R = static_cast<int>(img.rows()), C = static_cast<int>(img.cols());
  const int n = static_cast<int>(k.size());
  GrayImage tmp(R, C), out(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * pixel_clamped(img, r, c + i - anchor);
      tmp(r, c) = static_cast<float>(s);
    }
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * pixel_clamped(tmp, r + i - anchor, c);
      out(r, c) = static_cast<float>(s);
    }
  return out;
}

GrayImage blend(const GrayImage& img, const GrayImage& response, double alpha) {
  return clamp01(((1.0 - alpha) * img.cast<double>() + alpha * response.cast<double>()).cast<float>());
}

RgbImage per_plane(const RgbImage& img, const std::function<GrayImage(const GrayImage&)>& f) {
  RgbImage out;
  for (int c = 0; c < 3; ++c) out[c] = f(img[c]);
  return out;
}

Range parse_range(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  Range r;
  if (!(in >> r.lo >> r.hi) || !(in >> std::ws).eof())
    throw DomainError("augment: " + key + " expects two numbers 'lo hi', got '" + value + "'");
  if (r.lo > r.hi) throw DomainError("augment: " + key + " has lo > hi");
  return r;
}

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

std::string format_range(const Range& r) { return shortest(r.lo) + " " + shortest(r.hi); }

struct RangeField {
  const char* key;
  Range AugmentationConfig::*member;
};

constexpr RangeField kRangeFields[] = {
    {"rotation_deg", &AugmentationConfig::rotation_deg},
    {"crop_keep_frac", &AugmentationConfig::crop_keep_frac},
    {"gaussian_sigma", &AugmentationConfig::gaussian_sigma},
    {"blur_gaussian_sigma", &AugmentationConfig::blur_gaussian_sigma},
    {"blur_median_r", &AugmentationConfig::blur_median_r},
    {"blur_average_r", &AugmentationConfig::blur_average_r},
    {"sharpen_alpha", &AugmentationConfig::sharpen_alpha},
    {"sharpen_lightness", &AugmentationConfig::sharpen_lightness},
    {"emboss_alpha", &AugmentationConfig::emboss_alpha},
    {"emboss_strength", &AugmentationConfig::emboss_strength},
    {"snr_s", &AugmentationConfig::snr_s},
    {"perspective_scale", &AugmentationConfig::perspective_scale},
    {"piecewise_affine_scale", &AugmentationConfig::piecewise_affine_scale},
};

}  // namespace

std::string to_string(Stage s) { return kStageNames[static_cast<int>(s)]; }

AugmentationConfig AugmentationConfig::none() {
  AugmentationConfig cfg;
  cfg.stage_probability.fill(0.0);
  return cfg;
}

void AugmentationConfig::validate() const {
  for (const auto& f : kRangeFields) {
    const Range& r = this->*f.member;
    if (!(r.lo <= r.hi)) throw DomainError(std::string("augment: ") + f.key + " has lo > hi");
  }
  for (double p : stage_probability)
    if (!(p >= 0 && p <= 1)) throw DomainError("augment: stage probabilities must lie in [0,1]");
  if (crop_keep_frac.lo <= 0 || crop_keep_frac.hi > 1) throw DomainError("augment: crop_keep_frac must lie in (0,1]");
  if (blur_median_r.lo < 1) throw DomainError("augment: blur_median_r must be >= 1");
  if (blur_average_r.lo < 1) throw DomainError("augment: blur_average_r must be >= 1");
  if (snr_s.lo < 0 || snr_s.hi > 1) throw DomainError("augment: snr_s must lie in [0,1]");
  if (gaussian_sigma.lo < 0 || blur_gaussian_sigma.lo < 0) throw DomainError("augment: sigmas must be >= 0");
}

std::vector<std::pair<std::string, std::string>> to_settings(const AugmentationConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : kRangeFields) out.emplace_back(f.key, format_range(cfg.*f.member));
  for (int i = 0; i < kStageCount; ++i)
    out.emplace_back(std::string("p_") + kStageNames[i], shortest(cfg.stage_probability[i]));
  return out;
}

bool apply_setting(AugmentationConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : kRangeFields)
    if (key == f.key) {
      cfg.*f.member = parse_range(key, value);
      return true;
    }
  for (int i = 0; i < kStageCount; ++i)
    if (key == std::string("p_") + kStageNames[i]) {
      std::size_t used = 0;
      double p = 0;
      try {
        p = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != value.size()) throw DomainError("augment: " + key + " expects a number");
      cfg.stage_probability[i] = p;
      return true;
    }
  return false;
}

// ---------------------------------------------------------------------------

GrayImage warp(const GrayImage& img, const std::function<Point(const Point&)>& inverse_map) {
  GrayImage out(img.rows(), img.cols());
  for (int r = 0; r < img.rows(); ++r)
    for (int c = 0; c < img.cols(); ++c) {
      const Point src = inverse_map(Point(c, r));
      out(r, c) = bilinear(img, src.x(), src.y());
    }
  return out;
}

Point rotation_source(const GrayImage& img, double angle_deg, const Point& dst) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const Point center((img.cols() - 1) / 2.0, (img.rows() - 1) / 2.0);
  const Point d = dst - center;
  const double cs = std::cos(a), sn = std::sin(a);
  return center + Point(cs * d.x() + sn * d.y(), -sn * d.x() + cs * d.y());
}

GrayImage rotate(const GrayImage& img, double angle_deg) {
  if (angle_deg == 0.0) return img;
  return warp(img, [&](const Point& p) { return rotation_source(img, angle_deg, p); });
}

Point map_point(const CropWindow& w, const Point& dst) {
  return Point(w.x0 + (dst.x() + 0.5) * w.keep - 0.5, w.y0 + (dst.y() + 0.5) * w.keep - 0.5);
}

Point map_point(const PerspectiveMap& m, const Point& dst) {
  const Eigen::Vector3d h = m.homography * Eigen::Vector3d(dst.x(), dst.y(), 1.0);
  return h.head<2>() / h.z();
}

Point map_point(const PiecewiseAffineMap& m, const Point& dst) {
  const double sx = (m.cols - 1) / 3.0, sy = (m.rows - 1) / 3.0;
  const int cx = std::clamp(static_cast<int>(std::floor(dst.x() / sx)), 0, 2);
  const int cy = std::clamp(static_cast<int>(std::floor(dst.y() / sy)), 0, 2);
  const double u = dst.x() / sx - cx, v = dst.y() / sy - cy;
  const Point& p00 = m.source[cy * 4 + cx];
  const Point& p10 = m.source[cy * 4 + cx + 1];
  const Point& p01 = m.source[(cy + 1) * 4 + cx];
  const Point& p11 = m.source[(cy + 1) * 4 + cx + 1];
  if (u + v <= 1.0) return p00 + u * (p10 - p00) + v * (p01 - p00);
  return p11 + (1.0 - u) * (p01 - p11) + (1.0 - v) * (p10 - p11);
}

GrayImage crop_window(const GrayImage& img, const CropWindow& window) {
  if (window.keep == 1.0 && window.x0 == 0.0 && window.y0 == 0.0) return img;
  return warp(img, [&](const Point& p) { return map_point(window, p); });
}

GrayImage apply_perspective(const GrayImage& img, const PerspectiveMap& map) {
  return warp(img, [&](const Point& p) { return map_point(map, p); });
}

GrayImage apply_piecewise_affine(const GrayImage& img, const PiecewiseAffineMap& map) {
  return warp(img, [&](const Point& p) { return map_point(map, p); });
}

CropWindow sample_crop(int rows, int cols, double keep_frac, Rng& rng) {
  if (!(keep_frac > 0 && keep_frac <= 1)) throw DomainError("augment: keep_frac must lie in (0,1]");
  const double x0 = rng.uniform() * cols * (1.0 - keep_frac);
  const double y0 = rng.uniform() * rows * (1.0 - keep_frac);
  return {x0, y0, keep_frac};
}

PerspectiveMap sample_perspective(int rows, int cols, double scale, Rng& rng) {
  const double amp = scale * kImageSize;
  const std::array<Point, 4> dst = {Point(0, 0), Point(cols - 1, 0), Point(cols - 1, rows - 1), Point(0, rows - 1)};
  std::array<Point, 4> src;
  for (int k = 0; k < 4; ++k) src[k] = dst[k] + Point(rng.uniform(-amp, amp), rng.uniform(-amp, amp));
  // src = (a x + b y + c, d x + e y + f) / (g x + h y + 1)
  Eigen::Matrix<double, 8, 8> A;
  Eigen::Matrix<double, 8, 1> rhs;
  for (int k = 0; k < 4; ++k) {
    const double x = dst[k].x(), y = dst[k].y(), u = src[k].x(), v = src[k].y();
    A.row(2 * k) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    A.row(2 * k + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    rhs(2 * k) = u;
    rhs(2 * k + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> h = A.fullPivLu().solve(rhs);
  PerspectiveMap m;
  m.homography << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return m;
}

PiecewiseAffineMap sample_piecewise_affine(int rows, int cols, double scale, Rng& rng) {
  const double amp = scale * kImageSize;
  PiecewiseAffineMap m;
  m.rows = rows;
  m.cols = cols;
  for (int gy = 0; gy < 4; ++gy)
    for (int gx = 0; gx < 4; ++gx) {
      const Point base(gx * (cols - 1) / 3.0, gy * (rows - 1) / 3.0);
      m.source[gy * 4 + gx] = base + Point(rng.uniform(-amp, amp), rng.uniform(-amp, amp));
    }
  return m;
}

GrayImage crop_pad(const GrayImage& img, double keep_frac, Rng& rng) {
  return crop_window(img, sample_crop(static_cast<int>(img.rows()), static_cast<int>(img.cols()), keep_frac, rng));
}

GrayImage perspective(const GrayImage& img, double scale, Rng& rng) {
  return apply_perspective(img,
                           sample_perspective(static_cast<int>(img.rows()), static_cast<int>(img.cols()), scale, rng));
}

GrayImage piecewise_affine(const GrayImage& img, double scale, Rng& rng) {
  return apply_piecewise_affine(
      img, sample_piecewise_affine(static_cast<int>(img.rows()), static_cast<int>(img.cols()), scale, rng));
}

// ---------------------------------------------------------------------------

GrayImage median_filter(const GrayImage& img, int r) {
  if (r < 1 || r % 2 == 0) throw DomainError("augment: median window must be odd, got " + std::to_string(r));
  const int h = r / 2;
  GrayImage out(img.rows(), img.cols());
  std::vector<float> window(static_cast<std::size_t>(r) * r);
  for (int i = 0; i < img.rows(); ++i)
    for (int j = 0; j < img.cols(); ++j) {
      std::size_t n = 0;
      for (int di = -h; di <= h; ++di)
        for (int dj = -h; dj <= h; ++dj) window[n++] = pixel_clamped(img, i + di, j + dj);
      auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
      std::nth_element(window.begin(), mid, window.end());
      out(i, j) = *mid;
    }
  return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma < 0) throw DomainError("augment: gaussian sigma must be >= 0");
  if (sigma == 0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  return clamp01(separable(img, k, radius));
}

GrayImage average_blur(const GrayImage& img, int r) {
  if (r < 1) throw DomainError("augment: average window must be >= 1");
  if (r == 1) return img;
  return clamp01(separable(img, std::vector<double>(r, 1.0 / r), r / 2));
}

GrayImage filter3x3(const GrayImage& img, const Eigen::Matrix3d& kernel) {
  GrayImage out(img.rows(), img.cols());
  for (int i = 0; i < img.rows(); ++i)
    for (int j = 0; j < img.cols(); ++j) {
      double s = 0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) s += kernel(di + 1, dj + 1) * pixel_clamped(img, i + di, j + dj);
      out(i, j) = static_cast<float>(s);
    }
  return out;
}

GrayImage sharpen(const GrayImage& img, double alpha, double lightness) {
  if (alpha == 0) return img;
  Eigen::Matrix3d k = Eigen::Matrix3d::Constant(-1.0);
  k(1, 1) = 8.0 * lightness + 1.0;
  return blend(img, filter3x3(img, k), alpha);
}

GrayImage emboss(const GrayImage& img, double alpha, double strength) {
  if (alpha == 0) return img;
  const double s = strength, h = strength / 2;
  Eigen::Matrix3d k;
  k << -s, -h, 0, -h, 1, h, 0, h, s;
  return blend(img, filter3x3(img, k), alpha);
}

GrayImage gaussian_noise(const GrayImage& img, double sigma, Rng& rng) {
  GrayImage out(img.rows(), img.cols());
  for (Eigen::Index i = 0; i < img.size(); ++i)
    out.data()[i] = static_cast<float>(std::clamp(img.data()[i] + rng.normal(0.0, sigma), 0.0, 1.0));
  return out;
}

RgbImage gaussian_noise(const RgbImage& img, double sigma, Rng& rng) {
  return per_plane(img, [&](const GrayImage& p) { return gaussian_noise(p, sigma, rng); });
}

GrayImage salt_pepper(const GrayImage& img, double s, Rng& rng) {
  GrayImage out = img;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (rng.bernoulli(1.0 - s)) out.data()[i] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
  return out;
}

RgbImage salt_pepper(const RgbImage& img, double s, Rng& rng) {
  RgbImage out = img;
  for (Eigen::Index i = 0; i < out[0].size(); ++i)
    if (rng.bernoulli(1.0 - s)) {
      const float v = rng.bernoulli(0.5) ? 1.0f : 0.0f;
      for (int c = 0; c < 3; ++c) out[c].data()[i] = v;
    }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(const AppliedOp& op) {
  std::ostringstream out;
  out << to_string(op.stage);
  if (!op.variant.empty()) out << ":" << op.variant;
  for (const auto& [k, v] : op.params) out << " " << k << "=" << v;
  return out.str();
}

GrayImage GeometricTrace::apply(const GrayImage& img) const {
  GrayImage out = img;
  if (rotation_deg) out = rotate(out, *rotation_deg);
  if (crop) out = crop_window(out, *crop);
  if (perspective) out = apply_perspective(out, *perspective);
  if (piecewise) out = apply_piecewise_affine(out, *piecewise);
  return out;
}

AugmentedPair augment_pair(const GrayImage& ground_truth, const RgbImage& colorized, const AugmentationConfig& cfg,
                           Rng& rng) {
  cfg.validate();
  if (colorized.rows() != ground_truth.rows() || colorized.cols() != ground_truth.cols())
    throw DomainError("augment: colourised image and ground truth differ in size");
  const int rows = static_cast<int>(ground_truth.rows()), cols = static_cast<int>(ground_truth.cols());
  AugmentedPair out{colorized, ground_truth, {}, {}};
  auto geometric = [&](const std::function<GrayImage(const GrayImage&)>& f) {
    out.ground_truth = f(out.ground_truth);
    out.distorted = per_plane(out.distorted, f);
  };
  auto photometric = [&](const std::function<GrayImage(const GrayImage&)>& f) {
    out.distorted = per_plane(out.distorted, f);
  };
  auto active = [&](Stage s) { return rng.bernoulli(cfg.probability(s)); };

  if (active(Stage::rotation)) {
    const double angle = cfg.rotation_deg.sample(rng);
    out.geometry.rotation_deg = angle;
    geometric([&](const GrayImage& p) { return rotate(p, angle); });
    out.applied_ops.push_back({Stage::rotation, "", {{"angle_deg", angle}}});
  }
  if (active(Stage::crop_pad)) {
    const double keep = cfg.crop_keep_frac.sample(rng);
    const CropWindow w = sample_crop(rows, cols, keep, rng);
    out.geometry.crop = w;
    geometric([&](const GrayImage& p) { return crop_window(p, w); });
    out.applied_ops.push_back({Stage::crop_pad, "", {{"keep_frac", keep}, {"x0", w.x0}, {"y0", w.y0}}});
  }
  if (active(Stage::gaussian_noise)) {
    const double sigma = cfg.gaussian_sigma.sample(rng);
    out.distorted = gaussian_noise(out.distorted, sigma, rng);
    out.applied_ops.push_back({Stage::gaussian_noise, "", {{"sigma", sigma}}});
  }
  if (active(Stage::blur)) {
    switch (rng.uniform_int(0, 2)) {
      case 0: {
        const double sigma = cfg.blur_gaussian_sigma.sample(rng);
        photometric([&](const GrayImage& p) { return gaussian_blur(p, sigma); });
        out.applied_ops.push_back({Stage::blur, "gaussian", {{"sigma", sigma}}});
        break;
      }
      case 1: {
        const int lo = static_cast<int>(std::ceil(cfg.blur_median_r.lo)) | 1;
        const int hi = static_cast<int>(std::floor(cfg.blur_median_r.hi));
        const int r = hi < lo ? lo : lo + 2 * rng.uniform_int(0, (hi - lo) / 2);
        photometric([&](const GrayImage& p) { return median_filter(p, r); });
        out.applied_ops.push_back({Stage::blur, "median", {{"r", r}}});
        break;
      }
      default: {
        const int lo = static_cast<int>(std::ceil(cfg.blur_average_r.lo));
        const int hi = std::max(lo, static_cast<int>(std::floor(cfg.blur_average_r.hi)));
        const int r = rng.uniform_int(lo, hi);
        photometric([&](const GrayImage& p) { return average_blur(p, r); });
        out.applied_ops.push_back({Stage::blur, "average", {{"r", r}}});
        break;
      }
    }
  }
  if (active(Stage::sharpen_emboss)) {
    if (rng.bernoulli(0.5)) {
      const double alpha = cfg.sharpen_alpha.sample(rng), lightness = cfg.sharpen_lightness.sample(rng);
      photometric([&](const GrayImage& p) { return sharpen(p, alpha, lightness); });
      out.applied_ops.push_back({Stage::sharpen_emboss, "sharpen", {{"alpha", alpha}, {"lightness", lightness}}});
    } else {
      const double alpha = cfg.emboss_alpha.sample(rng), strength = cfg.emboss_strength.sample(rng);
      photometric([&](const GrayImage& p) { return emboss(p, alpha, strength); });
      out.applied_ops.push_back({Stage::sharpen_emboss, "emboss", {{"alpha", alpha}, {"strength", strength}}});
    }
  }
  if (active(Stage::salt_pepper)) {
    const double s = cfg.snr_s.sample(rng);
    out.distorted = salt_pepper(out.distorted, s, rng);
    out.applied_ops.push_back({Stage::salt_pepper, "", {{"s", s}}});
  }
  if (active(Stage::perspective)) {
    const double scale = cfg.perspective_scale.sample(rng);
    const PerspectiveMap m = sample_perspective(rows, cols, scale, rng);
    out.geometry.perspective = m;
    geometric([&](const GrayImage& p) { return apply_perspective(p, m); });
    out.applied_ops.push_back({Stage::perspective, "", {{"scale", scale}}});
  }
  if (active(Stage::piecewise_affine)) {
    const double scale = cfg.piecewise_affine_scale.sample(rng);
    const PiecewiseAffineMap m = sample_piecewise_affine(rows, cols, scale, rng);
    out.geometry.piecewise = m;
    geometric([&](const GrayImage& p) { return apply_piecewise_affine(p, m); });
    out.applied_ops.push_back({Stage::piecewise_affine, "", {{"scale", scale}}});
  }
  for (auto& p : out.distorted.planes) p = clamp01(p);
  out.ground_truth = clamp01(out.ground_truth);
  return out;
}

}  // namespace scr::augment
