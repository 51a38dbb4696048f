#include "scr/netpbm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "scr/errors.hpp"

namespace scr::netpbm {
namespace {

unsigned char quantize(float v) {
  const float c = std::min(1.0f, std::max(0.0f, v));
  return static_cast<unsigned char>(std::lround(255.0f * c));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : b_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long number() {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(static_cast<unsigned char>(b_[pos_])))
      throw ParseError("netpbm: expected a decimal number", pos_);
    unsigned long v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + static_cast<unsigned long>(b_[pos_] - '0');
      if (v > 1u << 24) throw ParseError("netpbm: number too large", pos_);
      ++pos_;
    }
    return v;
  }

  unsigned long binary_sample(bool wide) {
    const std::size_t need = wide ? 2 : 1;
    if (pos_ + need > b_.size()) throw ParseError("netpbm: truncated pixel data", b_.size());
    unsigned long v = static_cast<unsigned char>(b_[pos_]);
    if (wide) v = (v << 8) | static_cast<unsigned char>(b_[pos_ + 1]);
    pos_ += need;
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  bool at_end() const { return pos_ >= b_.size(); }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_pgm(const GrayImage& img) {
  std::ostringstream out;
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::string s = out.str();
  for (int i = 0; i < img.rows(); ++i)
    for (int j = 0; j < img.cols(); ++j) s.push_back(static_cast<char>(quantize(img(i, j))));
  return s;
}

std::string encode_ppm(const RgbImage& img) {
  std::ostringstream out;
  out << "P6\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::string s = out.str();
  for (int i = 0; i < img.rows(); ++i)
    for (int j = 0; j < img.cols(); ++j)
      for (int c = 0; c < 3; ++c) s.push_back(static_cast<char>(quantize(img[c](i, j))));
  return s;
}

std::variant<GrayImage, RgbImage> decode(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw ParseError("netpbm: missing magic", 0);
  const char kind = bytes[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
    throw ParseError(std::string("netpbm: unsupported variant P") + kind, 0);
  Reader r(bytes);
  r.advance();
  r.advance();
  const auto cols = r.number();
  const auto rows = r.number();
  const auto maxval = r.number();
  if (cols == 0 || rows == 0) throw ParseError("netpbm: empty image", r.pos());
  if (maxval == 0 || maxval > 65535) throw ParseError("netpbm: maxval out of range", r.pos());
  const bool binary = kind == '5' || kind == '6';
  const int channels = (kind == '3' || kind == '6') ? 3 : 1;
  if (binary) {
    if (r.at_end() || !std::isspace(static_cast<unsigned char>(bytes[r.pos()])))
      throw ParseError("netpbm: expected whitespace before raster", r.pos());
    r.advance();
  }
  const bool wide = maxval > 255;
  const float scale = static_cast<float>(maxval);
  auto sample = [&]() {
    const unsigned long v = binary ? r.binary_sample(wide) : r.number();
    if (v > maxval) throw ParseError("netpbm: sample exceeds maxval", r.pos());
    return static_cast<float>(v) / scale;
  };
  const int R = static_cast<int>(rows), C = static_cast<int>(cols);
  if (channels == 1) {
    GrayImage img(R, C);
    for (int i = 0; i < R; ++i)
      for (int j = 0; j < C; ++j) img(i, j) = sample();
    return img;
  }
  RgbImage img(R, C);
  for (int i = 0; i < R; ++i)
    for (int j = 0; j < C; ++j)
      for (int c = 0; c < 3; ++c) img[c](i, j) = sample();
  return img;
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("netpbm: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& img) { write_bytes(path, encode_pgm(img)); }
void write_ppm(const std::filesystem::path& path, const RgbImage& img) { write_bytes(path, encode_ppm(img)); }

std::variant<GrayImage, RgbImage> read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("netpbm: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode(ss.str());
}

RgbImage read_rgb(const std::filesystem::path& path) {
  auto img = read(path);
  if (auto* g = std::get_if<GrayImage>(&img)) return replicate(*g);
  return std::get<RgbImage>(std::move(img));
}

}  // namespace scr::netpbm
