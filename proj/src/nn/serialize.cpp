#include "scr/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace scr::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "weights I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_floats(std::string& out, const Tensor<float>& t) {
  const auto* p = reinterpret_cast<const char*>(t.raw());
  out.append(p, static_cast<std::size_t>(t.size()) * sizeof(float));
}

class Cursor {
 public:
  explicit Cursor(const std::string& b) : b_(b) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > b_.size()) throw ParseError(std::string("weights: truncated ") + what, b_.size());
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  Tensor<float> floats(const Shape& shape, const char* what) {
    Tensor<float> t(shape);
    const std::size_t bytes = static_cast<std::size_t>(t.size()) * sizeof(float);
    need(bytes, what);
    if (bytes) std::memcpy(t.raw(), b_.data() + pos_, bytes);
    pos_ += bytes;
    return t;
  }
  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_weights(const Network& net, const Weights<float>& weights) {
  check_compatible(net, weights);
  std::string out(kWeightsMagic, 4);
  put_u32(out, kWeightsVersion);
  put_u32(out, static_cast<std::uint32_t>(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& l = net.layer(i);
    out.push_back(static_cast<char>(l.kind));
    out.push_back(static_cast<char>(l.dims.size()));
    for (int d : l.dims) put_u32(out, static_cast<std::uint32_t>(d));
    put_floats(out, weights.params[i].weight);
    put_floats(out, weights.params[i].bias);
  }
  return out;
}

WeightsFile decode_weights(const std::string& bytes) {
  Cursor c(bytes);
  c.need(4, "magic");
  if (std::memcmp(bytes.data(), kWeightsMagic, 4) != 0) throw ParseError("weights: bad magic", 0);
  for (int i = 0; i < 4; ++i) c.u8("magic");
  const std::size_t version_at = c.pos();
  if (const auto v = c.u32("version"); v != kWeightsVersion)
    throw ParseError("weights: unsupported format version " + std::to_string(v), version_at);
  const auto count = c.u32("layer count");
  WeightsFile file;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = c.pos();
    const auto tag = c.u8("layer kind");
    if (tag < 1 || tag > 7) throw ParseError("weights: unknown layer kind " + std::to_string(tag), at);
    LayerSpec l{static_cast<LayerKind>(tag), {}};
    const auto rank = c.u8("rank");
    for (int d = 0; d < rank; ++d) l.dims.push_back(static_cast<int>(c.u32("dims")));
    if (l.has_parameters()) {
      const bool ok = (l.kind == LayerKind::fully_connected && rank == 2) ||
                      (l.kind == LayerKind::conv3x3 && rank == 4 && l.dims[1] == 3 && l.dims[2] == 3);
      if (!ok) throw ParseError("weights: bad dims for " + to_string(l.kind), at);
    } else if (l.kind != LayerKind::reshape && rank != 0) {
      throw ParseError("weights: " + to_string(l.kind) + " takes no dims", at);
    }
    LayerParams<float> p;
    if (l.has_parameters()) {
      p.weight = c.floats(l.weight_shape(), "weights");
      p.bias = c.floats(l.bias_shape(), "biases");
    }
    file.weights.velocity.push_back({Tensor<float>(l.weight_shape()), Tensor<float>(l.bias_shape())});
    file.weights.params.push_back(std::move(p));
    file.layers.push_back(std::move(l));
  }
  if (!c.at_end()) throw ParseError("weights: trailing bytes", c.pos());
  return file;
}

void save_weights(const std::filesystem::path& path, const Network& net, const Weights<float>& weights) {
  const std::string bytes = encode_weights(net, weights);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("weights: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Weights<float> load_weights(const std::filesystem::path& path, const Network& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("weights: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  WeightsFile file = decode_weights(ss.str());
  if (file.layers != net.layers())
    throw StructuralError("weights: " + path.string() + " was saved for a different layer chain");
  return std::move(file.weights);
}

}  // namespace scr::nn
