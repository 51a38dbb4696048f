#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scr/augment.hpp"
#include "scr/image.hpp"
#include "scr/rasterizer.hpp"
#include "scr/rng.hpp"
#include "scr/stroke.hpp"

namespace scr::dataset {

// ---------------------------------------------------------------------------
// IDX container (big-endian header, unsigned-byte payload).

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

/// Parses an unsigned-byte IDX stream; ParseError carries the failing offset.
IdxArray decode_idx(const std::string& bytes);
std::string encode_idx(const IdxArray& array);

struct IdxDataset {
  std::vector<GrayImage> images;  // values u8 / 255
  std::vector<int> labels;        // 0..9
};

IdxDataset load_idx(const std::string& image_bytes, const std::string& label_bytes);
/// Inverse of load_idx: returns {image bytes, label bytes}.
std::pair<std::string, std::string> write_idx(const IdxDataset& ds);

std::string read_file(const std::string& path);

/// MNIST-style 28x28 digit to a 64x64 white-on-black RGB image.
RgbImage mnist_to_rgb(const GrayImage& digit);

// ---------------------------------------------------------------------------
// Stroke-template glyphs.

struct GlyphLibrary {
  std::map<int, std::vector<StrokeSet>> templates;
  /// Per-control-point coordinate jitter (normalized units); shared points move together.
  double jitter = 0.03;
  /// Radius jitter (normalized units).
  double width_jitter = 0.05;
};

/// Hand-authored four-stroke templates for the digits 0..9.
GlyphLibrary default_glyphs();

/// Template strokes with control points jittered; throws DomainError for an unknown digit.
StrokeSet jittered_strokes(const GlyphLibrary& lib, int digit, Rng& rng);
GrayImage render_glyph(const GlyphLibrary& lib, int digit, Rng& rng);

/// bg + mask * (fg - bg) per channel.
RgbImage colorize(const GrayImage& mask, const Rgb& fg, const Rgb& bg);

/// Random foreground/background pair at least `min_distance` apart in L-infinity.
std::pair<Rgb, Rgb> sample_colors(Rng& rng, double min_distance = 0.2);

struct SynthSample {
  GrayImage clean;      // augment-consistent ink mask
  RgbImage colorized;   // before distortion
  RgbImage distorted;
  int label = 0;
  std::vector<augment::AppliedOp> applied_ops;
};

/// One centred digit, colourised and distorted.
SynthSample synth_single(const GlyphLibrary& lib, int digit, const augment::AugmentationConfig& cfg, Rng& rng);

/// Three digits shrunk into ~21-pixel slots of one 64x64 frame; label is the middle digit.
SynthSample synth_triplet(const GlyphLibrary& lib, const std::array<int, 3>& digits,
                          const augment::AugmentationConfig& cfg, Rng& rng);

/// Clean glyph strokes rescaled into slot `slot` of three.
StrokeSet place_in_slot(const StrokeSet& s, int slot);

/// `count` single-digit samples with labels cycling 0..9 in a seeded order.
/// Sample i depends only on (seed, i).
std::vector<SynthSample> synth_digit_set(const GlyphLibrary& lib, int count, const augment::AugmentationConfig& cfg,
                                         std::uint64_t seed, int workers = 1);

/// `count` undistorted glyph masks, label i % 10. Mask i depends only on (seed, i).
std::vector<GrayImage> clean_digit_set(const GlyphLibrary& lib, int count, std::uint64_t seed, int workers = 1);

}  // namespace scr::dataset
