#include "scr/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "scr/errors.hpp"

namespace scr::dataset {
namespace {

std::uint32_t read_be32(const std::string& b, std::size_t at, const char* what) {
  if (at + 4 > b.size()) throw ParseError(std::string("idx: truncated ") + what, b.size());
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(b[at + i]);
  return v;
}

void put_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

constexpr double kStrokeWidth = 0.25;

WQBCParams stroke(double x0, double y0, double x1, double y1, double x2, double y2, double w = kStrokeWidth) {
  return WQBCParams({x0, y0, w}, {x1, y1, w}, {x2, y2, w});
}

/// Straight segment (control point at the midpoint).
WQBCParams line(double x0, double y0, double x2, double y2) {
  return stroke(x0, y0, (x0 + x2) / 2, (y0 + y2) / 2, x2, y2);
}

/// Arc from a to b passing through m at t = 1/2.
WQBCParams through(double ax, double ay, double mx, double my, double bx, double by) {
  return stroke(ax, ay, 2 * mx - (ax + bx) / 2, 2 * my - (ay + by) / 2, bx, by);
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

template <typename Fn>
void parallel_indices(int n, int workers, Fn&& fn) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
}

}  // namespace

IdxArray decode_idx(const std::string& bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if ((magic >> 16) != 0 || ((magic >> 8) & 0xff) != 0x08)
    throw ParseError("idx: only unsigned-byte IDX payloads are supported", 0);
  const int rank = static_cast<int>(magic & 0xff);
  if (rank < 1) throw ParseError("idx: rank must be >= 1", 3);
  IdxArray out;
  std::size_t total = 1;
  for (int d = 0; d < rank; ++d) {
    out.dims.push_back(read_be32(bytes, 4 + 4 * d, "dimension"));
    total *= out.dims.back();
  }
  const std::size_t header = 4 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header + total) throw ParseError("idx: truncated payload", bytes.size());
  if (bytes.size() > header + total) throw ParseError("idx: trailing bytes", header + total);
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return out;
}

std::string encode_idx(const IdxArray& array) {
  std::string out;
  put_be32(out, 0x00000800u | static_cast<std::uint32_t>(array.dims.size()));
  for (auto d : array.dims) put_be32(out, d);
  out.append(array.data.begin(), array.data.end());
  return out;
}

IdxDataset load_idx(const std::string& image_bytes, const std::string& label_bytes) {
  if (read_be32(image_bytes, 0, "image magic") != kIdxImagesMagic)
    throw ParseError("idx: image file magic is not 0x00000803", 0);
  if (read_be32(label_bytes, 0, "label magic") != kIdxLabelsMagic)
    throw ParseError("idx: label file magic is not 0x00000801", 0);
  const IdxArray images = decode_idx(image_bytes);
  const IdxArray labels = decode_idx(label_bytes);
  if (images.dims[0] != labels.dims[0])
    throw ParseError("idx: " + std::to_string(images.dims[0]) + " images but " + std::to_string(labels.dims[0]) +
                         " labels",
                     4);
  IdxDataset ds;
  const int rows = static_cast<int>(images.dims[1]), cols = static_cast<int>(images.dims[2]);
  const std::size_t per = static_cast<std::size_t>(rows) * cols;
  for (std::uint32_t n = 0; n < images.dims[0]; ++n) {
    GrayImage img(rows, cols);
    for (std::size_t p = 0; p < per; ++p) img.data()[p] = images.data[n * per + p] / 255.0f;
    ds.images.push_back(std::move(img));
    const int label = labels.data[n];
    if (label > 9) throw ParseError("idx: label " + std::to_string(label) + " outside 0..9", 8 + n);
    ds.labels.push_back(label);
  }
  return ds;
}

std::pair<std::string, std::string> write_idx(const IdxDataset& ds) {
  if (ds.images.size() != ds.labels.size()) throw DomainError("idx: image and label counts differ");
  const int rows = ds.images.empty() ? 28 : static_cast<int>(ds.images[0].rows());
  const int cols = ds.images.empty() ? 28 : static_cast<int>(ds.images[0].cols());
  IdxArray images{{static_cast<std::uint32_t>(ds.images.size()), static_cast<std::uint32_t>(rows),
                   static_cast<std::uint32_t>(cols)},
                  {}};
  for (const auto& img : ds.images) {
    if (img.rows() != rows || img.cols() != cols) throw DomainError("idx: images differ in size");
    for (Eigen::Index p = 0; p < img.size(); ++p)
      images.data.push_back(static_cast<std::uint8_t>(std::lround(255.0f * std::clamp(img.data()[p], 0.0f, 1.0f))));
  }
  IdxArray labels{{static_cast<std::uint32_t>(ds.labels.size())}, {}};
  for (int l : ds.labels) labels.data.push_back(static_cast<std::uint8_t>(l));
  return {encode_idx(images), encode_idx(labels)};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RgbImage mnist_to_rgb(const GrayImage& digit) { return replicate(resize_bilinear(digit, kImageSize, kImageSize)); }

GlyphLibrary default_glyphs() {
  GlyphLibrary lib;
  auto& t = lib.templates;
  // Glyph box: x in [0.34, 0.66], y in [0.2, 0.8]; y grows downwards.
  t[0] = {{stroke(0.50, 0.20, 0.34, 0.20, 0.34, 0.50), stroke(0.34, 0.50, 0.34, 0.80, 0.50, 0.80),
           stroke(0.50, 0.80, 0.66, 0.80, 0.66, 0.50), stroke(0.66, 0.50, 0.66, 0.20, 0.50, 0.20)}};
  t[1] = {{line(0.52, 0.20, 0.52, 0.80), line(0.52, 0.20, 0.42, 0.30), line(0.52, 0.20, 0.52, 0.80),
           line(0.52, 0.20, 0.42, 0.30)}};
  t[2] = {{stroke(0.36, 0.32, 0.50, 0.08, 0.64, 0.34), stroke(0.64, 0.34, 0.62, 0.52, 0.36, 0.80),
           line(0.36, 0.80, 0.66, 0.80), line(0.36, 0.80, 0.66, 0.80)}};
  t[3] = {{stroke(0.37, 0.24, 0.72, 0.14, 0.48, 0.49), stroke(0.48, 0.49, 0.80, 0.68, 0.36, 0.78),
           stroke(0.37, 0.24, 0.72, 0.14, 0.48, 0.49), stroke(0.48, 0.49, 0.80, 0.68, 0.36, 0.78)}};
  t[4] = {{line(0.58, 0.20, 0.34, 0.60), line(0.34, 0.60, 0.68, 0.60), line(0.58, 0.22, 0.58, 0.80),
           line(0.58, 0.22, 0.58, 0.80)}};
  t[5] = {{line(0.64, 0.20, 0.40, 0.20), line(0.40, 0.20, 0.38, 0.47), through(0.38, 0.47, 0.66, 0.62, 0.36, 0.78),
           through(0.38, 0.47, 0.66, 0.62, 0.36, 0.78)}};
  t[6] = {{stroke(0.60, 0.20, 0.36, 0.30, 0.36, 0.65), stroke(0.36, 0.65, 0.36, 0.80, 0.50, 0.80),
           stroke(0.50, 0.80, 0.64, 0.80, 0.64, 0.65), through(0.64, 0.65, 0.50, 0.50, 0.36, 0.65)}};
  t[7] = {{line(0.34, 0.20, 0.66, 0.20), stroke(0.66, 0.20, 0.55, 0.45, 0.44, 0.80), line(0.34, 0.20, 0.66, 0.20),
           stroke(0.66, 0.20, 0.55, 0.45, 0.44, 0.80)}};
  t[8] = {{through(0.50, 0.20, 0.38, 0.35, 0.50, 0.50), through(0.50, 0.20, 0.62, 0.35, 0.50, 0.50),
           through(0.50, 0.50, 0.35, 0.65, 0.50, 0.80), through(0.50, 0.50, 0.65, 0.65, 0.50, 0.80)}};
  t[9] = {{stroke(0.64, 0.35, 0.64, 0.20, 0.50, 0.20), stroke(0.50, 0.20, 0.36, 0.20, 0.36, 0.35),
           through(0.36, 0.35, 0.50, 0.50, 0.64, 0.35), stroke(0.64, 0.35, 0.64, 0.70, 0.50, 0.80)}};
  return lib;
}

StrokeSet jittered_strokes(const GlyphLibrary& lib, int digit, Rng& rng) {
  const auto it = lib.templates.find(digit);
  if (it == lib.templates.end() || it->second.empty())
    throw DomainError("dataset: no glyph template for " + std::to_string(digit));
  const auto& variants = it->second;
  const StrokeSet& base = variants[rng.uniform_int(0, static_cast<int>(variants.size()) - 1)];
  const double shift_x = rng.uniform(-lib.jitter, lib.jitter);
  const double shift_y = rng.uniform(-lib.jitter, lib.jitter);
  // Points shared between strokes receive the same offset so joints stay closed.
  std::map<std::pair<double, double>, std::pair<double, double>> offsets;
  StrokeSet out;
  for (int k = 0; k < kStrokesPerGlyph; ++k) {
    std::array<WeightedPoint, 3> pts;
    for (int p = 0; p < 3; ++p) {
      const WeightedPoint q = base[k].point(p);
      auto [pos, fresh] = offsets.try_emplace({q.x, q.y});
      if (fresh) pos->second = {rng.uniform(-lib.jitter, lib.jitter), rng.uniform(-lib.jitter, lib.jitter)};
      const double dw = rng.uniform(-lib.width_jitter, lib.width_jitter);
      pts[p] = {clamp_unit(q.x + shift_x + pos->second.first), clamp_unit(q.y + shift_y + pos->second.second),
                clamp_unit(q.w + dw)};
    }
    out[k] = WQBCParams(pts[0], pts[1], pts[2]);
  }
  return out;
}

GrayImage render_glyph(const GlyphLibrary& lib, int digit, Rng& rng) {
  return rasterize_glyph(jittered_strokes(lib, digit, rng));
}

RgbImage colorize(const GrayImage& mask, const Rgb& fg, const Rgb& bg) {
  RgbImage out;
  for (int c = 0; c < 3; ++c) {
    if (!(fg[c] >= 0 && fg[c] <= 1 && bg[c] >= 0 && bg[c] <= 1))
      throw DomainError("dataset: colours must lie in [0,1]");
    out[c] = bg[c] + mask * (fg[c] - bg[c]);
  }
  return out;
}

std::pair<Rgb, Rgb> sample_colors(Rng& rng, double min_distance) {
  for (;;) {
    Rgb fg, bg;
    for (int c = 0; c < 3; ++c) {
      fg[c] = static_cast<float>(rng.uniform());
      bg[c] = static_cast<float>(rng.uniform());
    }
    double d = 0;
    for (int c = 0; c < 3; ++c) d = std::max(d, static_cast<double>(std::abs(fg[c] - bg[c])));
    if (d >= min_distance) return {fg, bg};
  }
}

namespace {

SynthSample finish(GrayImage mask, int label, const augment::AugmentationConfig& cfg, Rng& rng) {
  const auto [fg, bg] = sample_colors(rng);
  SynthSample s;
  s.colorized = colorize(mask, fg, bg);
  auto pair = augment::augment_pair(mask, s.colorized, cfg, rng);
  s.clean = std::move(pair.ground_truth);
  s.distorted = std::move(pair.distorted);
  s.applied_ops = std::move(pair.applied_ops);
  s.label = label;
  return s;
}

}  // namespace

SynthSample synth_single(const GlyphLibrary& lib, int digit, const augment::AugmentationConfig& cfg, Rng& rng) {
  GrayImage mask = render_glyph(lib, digit, rng);
  return finish(std::move(mask), digit, cfg, rng);
}

StrokeSet place_in_slot(const StrokeSet& s, int slot) {
  if (slot < 0 || slot > 2) throw DomainError("dataset: slot must be 0, 1 or 2");
  constexpr double kScale = 0.5;
  const double cx = (slot + 0.5) / 3.0;
  StrokeSet out;
  for (int k = 0; k < kStrokesPerGlyph; ++k) {
    std::array<WeightedPoint, 3> pts;
    for (int p = 0; p < 3; ++p) {
      const WeightedPoint q = s[k].point(p);
      // Halve the canvas radius: 2 + 30 w' = (2 + 30 w) / 2.
      pts[p] = {clamp_unit(cx + (q.x - 0.5) * kScale), clamp_unit(0.5 + (q.y - 0.5) * kScale),
                clamp_unit((30.0 * q.w - 2.0) / 60.0)};
    }
    out[k] = WQBCParams(pts[0], pts[1], pts[2]);
  }
  return out;
}

SynthSample synth_triplet(const GlyphLibrary& lib, const std::array<int, 3>& digits,
                          const augment::AugmentationConfig& cfg, Rng& rng) {
  std::array<GrayImage, 3> parts;
  for (int slot = 0; slot < 3; ++slot)
    parts[slot] = rasterize_glyph(place_in_slot(jittered_strokes(lib, digits[slot], rng), slot));
  return finish(compose(parts), digits[1], cfg, rng);
}

std::vector<SynthSample> synth_digit_set(const GlyphLibrary& lib, int count, const augment::AugmentationConfig& cfg,
                                         std::uint64_t seed, int workers) {
  std::vector<SynthSample> out(static_cast<std::size_t>(std::max(0, count)));
  const Rng root(seed);
  parallel_indices(count, workers, [&](int i) {
    Rng rng = root.substream("dataset.sample", static_cast<std::uint64_t>(i));
    out[i] = synth_single(lib, i % 10, cfg, rng);
  });
  return out;
}

std::vector<GrayImage> clean_digit_set(const GlyphLibrary& lib, int count, std::uint64_t seed, int workers) {
  std::vector<GrayImage> out(static_cast<std::size_t>(std::max(0, count)));
  const Rng root(seed);
  parallel_indices(count, workers, [&](int i) {
    Rng rng = root.substream("dataset.clean", static_cast<std::uint64_t>(i));
    out[i] = render_glyph(lib, i % 10, rng);
  });
  return out;
}

}  // namespace scr::dataset
