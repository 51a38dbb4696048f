#include "scr/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>

#include "scr/rng.hpp"

namespace scr::nn {

std::string to_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? ", " : "") + std::to_string(s[i]);
  return out + "]";
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::upsample2x: return "upsample2x";
    case LayerKind::maxpool2x2: return "maxpool2x2";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::reshape: return "reshape";
  }
  return "unknown";
}

int LayerSpec::fan_in() const {
  switch (kind) {
    case LayerKind::fully_connected: return dims.at(1);
    case LayerKind::conv3x3: return 9 * dims.at(3);
    default: return 0;
  }
}

Shape LayerSpec::weight_shape() const { return has_parameters() ? dims : Shape{}; }
Shape LayerSpec::bias_shape() const { return has_parameters() ? Shape{dims.at(0)} : Shape{}; }

Shape output_shape(const LayerSpec& layer, const Shape& in) {
  auto fail = [&](const std::string& why) {
    throw StructuralError("nn: " + to_string(layer.kind) + " cannot take input " + to_string(in) + ": " + why);
  };
  switch (layer.kind) {
    case LayerKind::fully_connected:
      if (layer.dims.size() != 2 || layer.dims[0] <= 0 || layer.dims[1] <= 0) fail("bad dims");
      if (shape_size(in) != layer.dims[1]) fail("expects " + std::to_string(layer.dims[1]) + " features");
      return {layer.dims[0]};
    case LayerKind::conv3x3:
      if (layer.dims.size() != 4 || layer.dims[1] != 3 || layer.dims[2] != 3 || layer.dims[0] <= 0)
        fail("kernel must be 3x3");
      if (in.size() != 3 || in[2] != layer.dims[3]) fail("expects [H, W, " + std::to_string(layer.dims[3]) + "]");
      return {in[0], in[1], layer.dims[0]};
    case LayerKind::upsample2x:
      if (in.size() != 3) fail("expects [H, W, C]");
      return {2 * in[0], 2 * in[1], in[2]};
    case LayerKind::maxpool2x2:
      if (in.size() != 3 || in[0] % 2 || in[1] % 2) fail("expects [H, W, C] with even H, W");
      return {in[0] / 2, in[1] / 2, in[2]};
    case LayerKind::relu:
    case LayerKind::sigmoid:
      return in;
    case LayerKind::reshape:
      if (shape_size(layer.dims) != shape_size(in)) fail("element count differs from " + to_string(layer.dims));
      return layer.dims;
  }
  fail("unknown layer kind");
  return {};
}

Network::Network(Shape input_shape, std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  shapes_.push_back(std::move(input_shape));
  for (const auto& l : layers_) shapes_.push_back(nn::output_shape(l, shapes_.back()));
}

template <typename Scalar>
Eigen::Index Weights<Scalar>::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& p : params) n += p.weight.size() + p.bias.size();
  return n;
}

template <typename Scalar>
void check_compatible(const Network& net, const Weights<Scalar>& weights) {
  if (weights.params.size() != net.size())
    throw StructuralError("nn: weights hold " + std::to_string(weights.params.size()) + " layers, network has " +
                          std::to_string(net.size()));
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& l = net.layer(i);
    const auto& p = weights.params[i];
    if (p.weight.shape() != l.weight_shape() || p.bias.shape() != l.bias_shape())
      throw StructuralError("nn: parameter shape mismatch at layer " + std::to_string(i));
  }
}

namespace {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstRowMap = Eigen::Map<const RowMatrix<Scalar>>;

Shape batched(int n, const Shape& s) {
  Shape out{n};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

// Rows of the im2col matrix processed per GEMM; bounds scratch memory.
constexpr Eigen::Index kConvChunkRows = 1 << 15;

/// Patch matrix for samples [n0, n0 + count): one row per output pixel, columns
/// ordered (ky, kx, c) to match the [out, 3, 3, in] weight layout.
template <typename Scalar>
void im2col(const Scalar* x, int count, int H, int W, int C, RowMatrix<Scalar>& cols) {
  cols.setZero(static_cast<Eigen::Index>(count) * H * W, 9 * C);
  for (int n = 0; n < count; ++n)
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) {
        Scalar* row = cols.row((static_cast<Eigen::Index>(n) * H + y) * W + xx).data();
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= W) continue;
            const Scalar* src = x + ((static_cast<Eigen::Index>(n) * H + sy) * W + sx) * C;
            std::copy(src, src + C, row + (ky * 3 + kx) * C);
          }
        }
      }
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& cols, int count, int H, int W, int C, Scalar* dx) {
  for (int n = 0; n < count; ++n)
    for (int y = 0; y < H; ++y)
      for (int xx = 0; xx < W; ++xx) {
        const Scalar* row = cols.row((static_cast<Eigen::Index>(n) * H + y) * W + xx).data();
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= H) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = xx + kx - 1;
            if (sx < 0 || sx >= W) continue;
            Scalar* dst = dx + ((static_cast<Eigen::Index>(n) * H + sy) * W + sx) * C;
            const Scalar* src = row + (ky * 3 + kx) * C;
            for (int c = 0; c < C; ++c) dst[c] += src[c];
          }
        }
      }
}


// Narrow layers (few input x output channels) run as direct planar
// convolution; im2col + GEMM wins once the channel product grows.
constexpr int kDirectConvMaxChannelProduct = 64;

inline bool use_direct_conv(int C, int K) { return C * K <= kDirectConvMaxChannelProduct; }

/// Zero-bordered planar layout: C planes of (H + 2) x (W + 2). With the same
/// row stride on the output side every 3x3 tap becomes one flat shifted axpy;
/// the two junk columns per output row are discarded.
template <typename Scalar>
struct PaddedPlanes {
  int H, W, C;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> data;  // one column per channel

  PaddedPlanes(int h, int w, int c) : H(h), W(w), C(c), data(static_cast<Eigen::Index>(h + 2) * (w + 2), c) {}

  int stride() const { return W + 2; }
  /// Flat span covering every valid output position.
  Eigen::Index span() const { return static_cast<Eigen::Index>(H - 1) * stride() + W; }
  static Eigen::Index tap_offset(int stride, int ky, int kx) { return static_cast<Eigen::Index>(ky) * stride + kx; }

  void load(const Scalar* hwc) {
    data.setZero();
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < C; ++c) data((y + 1) * stride() + x + 1, c) = hwc[(y * W + x) * C + c];
  }
  void store(Scalar* hwc) const {
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int c = 0; c < C; ++c) hwc[(y * W + x) * C + c] = data((y + 1) * stride() + x + 1, c);
  }
};

/// Output planes with the padded row stride (junk columns at x >= W).
template <typename Scalar>
using StridedPlanes = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
Tensor<Scalar> direct_conv_forward(const LayerSpec& l, const LayerParams<Scalar>& p, const Tensor<Scalar>& in) {
  const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3), K = l.dims[0];
  Tensor<Scalar> out({N, H, W, K});
  PaddedPlanes<Scalar> src(H, W, C);
  const int stride = src.stride();
  const Eigen::Index L = src.span();
  StridedPlanes<Scalar> q(static_cast<Eigen::Index>(H) * stride, K);
  const Scalar* w = p.weight.raw();
  for (int n = 0; n < N; ++n) {
    src.load(in.raw() + static_cast<Eigen::Index>(n) * H * W * C);
    for (int k = 0; k < K; ++k) {
      auto qk = q.col(k).head(L);
      qk.setConstant(p.bias[k]);
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const Eigen::Index off = PaddedPlanes<Scalar>::tap_offset(stride, ky, kx);
          for (int c = 0; c < C; ++c) qk += w[((k * 3 + ky) * 3 + kx) * C + c] * src.data.col(c).segment(off, L);
        }
    }
    Scalar* dst = out.raw() + static_cast<Eigen::Index>(n) * H * W * K;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int k = 0; k < K; ++k) dst[(y * W + x) * K + k] = q(y * stride + x, k);
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> direct_conv_backward(const LayerSpec& l, const LayerParams<Scalar>& p, const Tensor<Scalar>& in,
                                    const Tensor<Scalar>& dout, LayerParams<Scalar>* g) {
  const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3), K = l.dims[0];
  Tensor<Scalar> din(in.shape());
  if (g) {
    g->weight = Tensor<Scalar>(p.weight.shape());
    g->bias = Tensor<Scalar>(p.bias.shape());
  }
  PaddedPlanes<Scalar> src(H, W, C), dsrc(H, W, C);
  const int stride = src.stride();
  const Eigen::Index L = src.span();
  StridedPlanes<Scalar> dq = StridedPlanes<Scalar>::Zero(static_cast<Eigen::Index>(H) * stride, K);
  const Scalar* w = p.weight.raw();
  for (int n = 0; n < N; ++n) {
    if (g) src.load(in.raw() + static_cast<Eigen::Index>(n) * H * W * C);
    const Scalar* gy = dout.raw() + static_cast<Eigen::Index>(n) * H * W * K;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        for (int k = 0; k < K; ++k) dq(y * stride + x, k) = gy[(y * W + x) * K + k];
    dsrc.data.setZero();
    for (int k = 0; k < K; ++k) {
      const auto gk = dq.col(k).head(L);
      if (g) g->bias[k] += gk.sum();
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const Eigen::Index off = PaddedPlanes<Scalar>::tap_offset(stride, ky, kx);
          for (int c = 0; c < C; ++c) {
            const int widx = ((k * 3 + ky) * 3 + kx) * C + c;
            dsrc.data.col(c).segment(off, L) += w[widx] * gk;
            if (g) g->weight[widx] += gk.dot(src.data.col(c).segment(off, L));
          }
        }
    }
    dsrc.store(din.raw() + static_cast<Eigen::Index>(n) * H * W * C);
  }
  return din;
}

template <typename Scalar>
Tensor<Scalar> conv_forward(const LayerSpec& l, const LayerParams<Scalar>& p, const Tensor<Scalar>& in) {
  const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3), K = l.dims[0];
  if (use_direct_conv(C, K)) return direct_conv_forward(l, p, in);
  Tensor<Scalar> out({N, H, W, K});
  ConstRowMap<Scalar> wm(p.weight.raw(), K, 9 * C);
  const auto bias = p.bias.data().transpose();
  const int chunk = static_cast<int>(std::max<Eigen::Index>(1, kConvChunkRows / (H * W)));
  RowMatrix<Scalar> cols;
  for (int n0 = 0; n0 < N; n0 += chunk) {
    const int count = std::min(chunk, N - n0);
    const Eigen::Index offset = static_cast<Eigen::Index>(n0) * H * W;
    im2col(in.raw() + offset * C, count, H, W, C, cols);
    RowMap<Scalar> y(out.raw() + offset * K, static_cast<Eigen::Index>(count) * H * W, K);
    y.noalias() = cols * wm.transpose();
    y.rowwise() += bias;
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> conv_backward(const LayerSpec& l, const LayerParams<Scalar>& p, const Tensor<Scalar>& in,
                             const Tensor<Scalar>& dout, LayerParams<Scalar>* g) {
  const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3), K = l.dims[0];
  if (use_direct_conv(C, K)) return direct_conv_backward(l, p, in, dout, g);
  Tensor<Scalar> din(in.shape());
  ConstRowMap<Scalar> wm(p.weight.raw(), K, 9 * C);
  std::optional<RowMap<Scalar>> dw;
  if (g) {
    g->weight = Tensor<Scalar>(p.weight.shape());
    g->bias = Tensor<Scalar>(p.bias.shape());
    dw.emplace(g->weight.raw(), K, 9 * C);
  }
  const int chunk = static_cast<int>(std::max<Eigen::Index>(1, kConvChunkRows / (H * W)));
  RowMatrix<Scalar> cols, dcols;
  for (int n0 = 0; n0 < N; n0 += chunk) {
    const int count = std::min(chunk, N - n0);
    const Eigen::Index offset = static_cast<Eigen::Index>(n0) * H * W;
    ConstRowMap<Scalar> dy(dout.raw() + offset * K, static_cast<Eigen::Index>(count) * H * W, K);
    if (g) {
      im2col(in.raw() + offset * C, count, H, W, C, cols);
      dw->noalias() += dy.transpose() * cols;
      g->bias.data() += dy.colwise().sum().transpose();
    }
    dcols.noalias() = dy * wm;
    col2im_add(dcols, count, H, W, C, din.raw() + offset * C);
  }
  return din;
}

template <typename Scalar>
Tensor<Scalar> fc_forward(const LayerSpec& l, const LayerParams<Scalar>& p, const Tensor<Scalar>& in) {
  const int N = in.dim(0), out_f = l.dims[0], in_f = l.dims[1];
  Tensor<Scalar> out({N, out_f});
  ConstRowMap<Scalar> x(in.raw(), N, in_f);
  ConstRowMap<Scalar> w(p.weight.raw(), out_f, in_f);
  auto y = out.matrix();
  y.noalias() = x * w.transpose();
  y.rowwise() += p.bias.data().transpose();
  return out;
}

template <typename Scalar>
Tensor<Scalar> fc_backward(const LayerSpec& l, const LayerParams<Scalar>& p, const Tensor<Scalar>& in,
                           const Tensor<Scalar>& dout, LayerParams<Scalar>* g) {
  const int N = in.dim(0), out_f = l.dims[0], in_f = l.dims[1];
  ConstRowMap<Scalar> x(in.raw(), N, in_f);
  ConstRowMap<Scalar> w(p.weight.raw(), out_f, in_f);
  ConstRowMap<Scalar> dy(dout.raw(), N, out_f);
  if (g) {
    g->weight = Tensor<Scalar>(p.weight.shape());
    g->bias = Tensor<Scalar>(p.bias.shape());
    RowMap<Scalar>(g->weight.raw(), out_f, in_f).noalias() = dy.transpose() * x;
    g->bias.data() = dy.colwise().sum().transpose();
  }
  Tensor<Scalar> din(in.shape());
  RowMap<Scalar>(din.raw(), N, in_f).noalias() = dy * w;
  return din;
}

template <typename Scalar>
Tensor<Scalar> upsample_forward(const Tensor<Scalar>& in) {
  const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
  Tensor<Scalar> out({N, 2 * H, 2 * W, C});
  for (int n = 0; n < N; ++n)
    for (int y = 0; y < 2 * H; ++y)
      for (int x = 0; x < 2 * W; ++x) {
        const Scalar* src = in.raw() + ((static_cast<Eigen::Index>(n) * H + y / 2) * W + x / 2) * C;
        std::copy(src, src + C, out.raw() + ((static_cast<Eigen::Index>(n) * 2 * H + y) * 2 * W + x) * C);
      }
  return out;
}

template <typename Scalar>
Tensor<Scalar> upsample_backward(const Tensor<Scalar>& in, const Tensor<Scalar>& dout) {
  const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
  Tensor<Scalar> din(in.shape());
  for (int n = 0; n < N; ++n)
    for (int y = 0; y < 2 * H; ++y)
      for (int x = 0; x < 2 * W; ++x) {
        const Scalar* src = dout.raw() + ((static_cast<Eigen::Index>(n) * 2 * H + y) * 2 * W + x) * C;
        Scalar* dst = din.raw() + ((static_cast<Eigen::Index>(n) * H + y / 2) * W + x / 2) * C;
        for (int c = 0; c < C; ++c) dst[c] += src[c];
      }
  return din;
}

template <typename Scalar>
Tensor<Scalar> maxpool_forward(const Tensor<Scalar>& in, std::vector<Eigen::Index>* route) {
  const int N = in.dim(0), H = in.dim(1), W = in.dim(2), C = in.dim(3);
  const int Ho = H / 2, Wo = W / 2;
  Tensor<Scalar> out({N, Ho, Wo, C});
  if (route) route->resize(static_cast<std::size_t>(out.size()));
  Eigen::Index o = 0;
  for (int n = 0; n < N; ++n)
    for (int y = 0; y < Ho; ++y)
      for (int x = 0; x < Wo; ++x)
        for (int c = 0; c < C; ++c, ++o) {
          Eigen::Index best = ((static_cast<Eigen::Index>(n) * H + 2 * y) * W + 2 * x) * C + c;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const Eigen::Index idx = ((static_cast<Eigen::Index>(n) * H + 2 * y + dy) * W + 2 * x + dx) * C + c;
              if (in[idx] > in[best]) best = idx;
            }
          out[o] = in[best];
          if (route) (*route)[o] = best;
        }
  return out;
}

template <typename Scalar>
Tensor<Scalar> run_layer(const LayerSpec& l, const LayerParams<Scalar>& p, const Tensor<Scalar>& in,
                         std::vector<Eigen::Index>* route) {
  switch (l.kind) {
    case LayerKind::fully_connected: return fc_forward(l, p, in);
    case LayerKind::conv3x3: return conv_forward(l, p, in);
    case LayerKind::upsample2x: return upsample_forward(in);
    case LayerKind::maxpool2x2: return maxpool_forward(in, route);
    case LayerKind::relu: return Tensor<Scalar>(in.shape(), in.data().cwiseMax(Scalar(0)));
    case LayerKind::sigmoid:
      return Tensor<Scalar>(in.shape(), (Scalar(1) / (Scalar(1) + (-in.data().array()).exp())).matrix());
    case LayerKind::reshape: return in.reshaped(batched(in.dim(0), l.dims));
  }
  throw StructuralError("nn: unknown layer kind");
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> forward(const Network& net, const Weights<Scalar>& weights, const Tensor<Scalar>& input,
                       Tape<Scalar>* tape) {
  check_compatible(net, weights);
  if (input.rank() < 1 || input.dim(0) < 1 ||
      Shape(input.shape().begin() + 1, input.shape().end()) != net.input_shape())
    throw StructuralError("nn: input " + to_string(input.shape()) + " does not match network input " +
                          to_string(net.input_shape()));
  if (tape) {
    *tape = Tape<Scalar>{};
    tape->inputs.reserve(net.size());
    tape->outputs.resize(net.size());
    tape->argmax.resize(net.size());
    tape->weights_identity = &weights;
    tape->weights_version = weights.version;
    tape->layer_count = net.size();
  }
  Tensor<Scalar> x = input;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& l = net.layer(i);
    Tensor<Scalar> y = run_layer(l, weights.params[i], x, tape ? &tape->argmax[i] : nullptr);
    if (tape) {
      if (l.kind == LayerKind::sigmoid) tape->outputs[i] = y;
      tape->inputs.push_back(std::move(x));
    }
    x = std::move(y);
  }
  return x;
}

template <typename Scalar>
Tensor<Scalar> backward(const Network& net, const Weights<Scalar>& weights, const Tape<Scalar>& tape,
                        const Tensor<Scalar>& output_gradient, Gradients<Scalar>* grads) {
  if (tape.layer_count != net.size() || tape.inputs.size() != net.size())
    throw StructuralError("nn: tape was not recorded for this network");
  if (tape.weights_identity != &weights || tape.weights_version != weights.version)
    throw StructuralError("nn: tape is stale; weights changed since the forward pass");
  const int N = tape.inputs.front().dim(0);
  if (output_gradient.shape() != batched(N, net.output_shape()))
    throw StructuralError("nn: output gradient " + to_string(output_gradient.shape()) + " does not match output " +
                          to_string(batched(N, net.output_shape())));
  if (grads) {
    grads->clear();
    grads->resize(net.size());
  }
  Tensor<Scalar> g = output_gradient;
  for (std::size_t k = net.size(); k-- > 0;) {
    const auto& l = net.layer(k);
    const auto& in = tape.inputs[k];
    LayerParams<Scalar>* lg = grads ? &(*grads)[k] : nullptr;
    switch (l.kind) {
      case LayerKind::fully_connected: g = fc_backward(l, weights.params[k], in, g, lg); break;
      case LayerKind::conv3x3: g = conv_backward(l, weights.params[k], in, g, lg); break;
      case LayerKind::upsample2x: g = upsample_backward(in, g); break;
      case LayerKind::maxpool2x2: {
        Tensor<Scalar> din(in.shape());
        const auto& route = tape.argmax[k];
        for (Eigen::Index o = 0; o < g.size(); ++o) din[route[o]] += g[o];
        g = std::move(din);
        break;
      }
      case LayerKind::relu:
        g = Tensor<Scalar>(in.shape(), (in.data().array() > Scalar(0)).select(g.data(), Scalar(0)).matrix());
        break;
      case LayerKind::sigmoid: {
        const auto& s = tape.outputs[k].data().array();
        g = Tensor<Scalar>(in.shape(), (g.data().array() * s * (Scalar(1) - s)).matrix());
        break;
      }
      case LayerKind::reshape: g = std::move(g).reshaped(in.shape()); break;
    }
  }
  return g;
}

template <typename Scalar>
Weights<Scalar> init_weights(const Network& net, std::uint64_t seed) {
  Rng rng = Rng(seed).substream("nn.init");
  Weights<Scalar> w;
  for (const auto& l : net.layers()) {
    LayerParams<Scalar> p{Tensor<Scalar>(l.weight_shape()), Tensor<Scalar>(l.bias_shape())};
    if (l.has_parameters()) {
      const double bound = std::sqrt(6.0 / l.fan_in());
      for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    w.velocity.push_back({Tensor<Scalar>(l.weight_shape()), Tensor<Scalar>(l.bias_shape())});
    w.params.push_back(std::move(p));
  }
  return w;
}

template <typename Scalar>
Tensor<Scalar> gather(const Tensor<Scalar>& batch, std::span<const int> indices) {
  Shape shape = batch.shape();
  shape.at(0) = static_cast<int>(indices.size());
  Tensor<Scalar> out(shape);
  auto dst = out.matrix();
  const auto src = batch.matrix();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= src.rows()) throw StructuralError("nn: gather index out of range");
    dst.row(static_cast<Eigen::Index>(i)) = src.row(indices[i]);
  }
  return out;
}

std::uint64_t checksum(const Weights<float>& weights) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const Tensor<float>& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.raw());
    for (std::size_t i = 0; i < static_cast<std::size_t>(t.size()) * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : weights.params) {
    mix(p.weight);
    mix(p.bias);
  }
  return h;
}

#define SCR_INSTANTIATE(S)                                                                                    \
  template struct Weights<S>;                                                                                 \
  template void check_compatible(const Network&, const Weights<S>&);                                          \
  template Tensor<S> forward(const Network&, const Weights<S>&, const Tensor<S>&, Tape<S>*);                  \
  template Tensor<S> backward(const Network&, const Weights<S>&, const Tape<S>&, const Tensor<S>&, Gradients<S>*); \
  template Weights<S> init_weights(const Network&, std::uint64_t);                                            \
  template Tensor<S> gather(const Tensor<S>&, std::span<const int>);

SCR_INSTANTIATE(float)
SCR_INSTANTIATE(double)
#undef SCR_INSTANTIATE

}  // namespace scr::nn
