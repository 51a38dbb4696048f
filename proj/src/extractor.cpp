#include "scr/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scr/errors.hpp"
#include "scr/nn/loss.hpp"
#include "scr/rng.hpp"

namespace scr {

namespace {

constexpr int kPixels = kImageSize * kImageSize;

void require_weights(const nn::Model& model, const char* module) {
  if (model.weights.empty()) throw UsageError(std::string(module) + ": no weights loaded");
  try {
    nn::check_compatible(model.net, model.weights);
  } catch (const StructuralError& e) {
    throw UsageError(std::string(module) + ": " + e.what());
  }
}

std::vector<int> permutation(Rng& rng, int n) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(0, i)]);
  return order;
}

// Yields batches from successive seeded permutations of [0, n).
class BatchSampler {
 public:
  BatchSampler(const Rng& root, int n, int batch) : root_(root), n_(n), batch_(std::min(batch, n)) {}

  std::vector<int> next() {
    std::vector<int> out;
    out.reserve(batch_);
    while (static_cast<int>(out.size()) < batch_) {
      if (pos_ == order_.size()) {
        Rng rng = root_.substream("epoch", epoch_++);
        order_ = permutation(rng, n_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  Rng root_;
  int n_;
  int batch_;
  std::vector<int> order_;
  std::size_t pos_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace

nn::Network extractor_network(Profile profile) {
  using namespace nn;
  const int c1 = scaled(profile, 16), c2 = scaled(profile, 32), c3 = scaled(profile, 64), c4 = scaled(profile, 128);
  const int hidden = scaled(profile, 256);
  const int flat = 4 * 4 * c4;
  return Network({kImageSize, kImageSize, 3}, {
      conv3x3(3, c1), relu(), conv3x3(c1, c1), relu(), maxpool2x2(),
      conv3x3(c1, c2), relu(), conv3x3(c2, c2), relu(), maxpool2x2(),
      conv3x3(c2, c3), relu(), conv3x3(c3, c3), relu(), maxpool2x2(),
      conv3x3(c3, c4), relu(), conv3x3(c4, c4), relu(), maxpool2x2(),
      reshape({flat}),
      fully_connected(flat, hidden), relu(),
      fully_connected(hidden, kGlyphParams),
      sigmoid(),
  });
}

nn::Network classifier_head_network() {
  using namespace nn;
  return Network({kGlyphParams}, {fully_connected(kGlyphParams, 256), relu(), fully_connected(256, kClasses)});
}

nn::Network baseline_network() {
  using namespace nn;
  return Network({kImageSize, kImageSize, 3}, {
      conv3x3(3, 16), relu(), maxpool2x2(),
      conv3x3(16, 32), relu(), maxpool2x2(),
      conv3x3(32, 64), relu(), maxpool2x2(),
      reshape({8 * 8 * 64}),
      fully_connected(8 * 8 * 64, 128), relu(),
      fully_connected(128, kClasses),
  });
}

nn::Tensor<float> rgb_tensor(std::span<const RgbImage> images) {
  nn::Tensor<float> t({static_cast<int>(images.size()), kImageSize, kImageSize, 3});
  float* out = t.raw();
  for (const auto& img : images) {
    if (img.rows() != kImageSize || img.cols() != kImageSize) throw DomainError("extractor: images must be 64x64");
    for (int i = 0; i < kPixels; ++i)
      for (int c = 0; c < 3; ++c) *out++ = img[c].data()[i];
  }
  return t;
}

RgbImage rgb_from_tensor(const nn::Tensor<float>& t, int index) {
  RgbImage img(kImageSize, kImageSize);
  const float* in = t.raw() + static_cast<Eigen::Index>(index) * kPixels * 3;
  for (int i = 0; i < kPixels; ++i)
    for (int c = 0; c < 3; ++c) img[c].data()[i] = *in++;
  return img;
}

nn::Tensor<float> extract_batch(const Extractor& extractor, const nn::Tensor<float>& images) {
  require_weights(extractor, "extractor");
  return nn::forward(extractor.net, extractor.weights, images);
}

StrokeSet extract(const Extractor& extractor, const RgbImage& image) {
  const RgbImage one[] = {image};
  const auto out = extract_batch(extractor, rgb_tensor(one));
  return stroke_set_from_span(std::span<const float>(out.raw(), kGlyphParams));
}

template <typename Scalar>
nn::Tensor<Scalar> reconstruct_forward(const nn::Network& extractor_net, const nn::Weights<Scalar>& extractor_weights,
                                       const nn::Network& decoder_net, const nn::Weights<Scalar>& decoder_weights,
                                       const nn::Tensor<Scalar>& images, ReconstructionTape<Scalar>* tape) {
  const int n = images.dim(0);
  auto params = nn::forward(extractor_net, extractor_weights, images, tape ? &tape->extractor : nullptr);
  const auto strokes = nn::forward(decoder_net, decoder_weights,
                                   std::move(params).reshaped({n * kStrokesPerGlyph, kParamsPerStroke}),
                                   tape ? &tape->decoder : nullptr);
  nn::Tensor<Scalar> out({n, kImageSize, kImageSize, 1});
  if (tape) {
    tape->batch = n;
    tape->winner.assign(static_cast<std::size_t>(n) * kPixels, 0);
  }
  for (int s = 0; s < n; ++s) {
    const Scalar* base = strokes.raw() + static_cast<Eigen::Index>(s) * kStrokesPerGlyph * kPixels;
    Scalar* dst = out.raw() + static_cast<Eigen::Index>(s) * kPixels;
    for (int p = 0; p < kPixels; ++p) {
      std::uint8_t best = 0;
      Scalar value = base[p];
      for (int k = 1; k < kStrokesPerGlyph; ++k)
        if (base[k * kPixels + p] > value) {
          value = base[k * kPixels + p];
          best = static_cast<std::uint8_t>(k);
        }
      dst[p] = value;
      if (tape) tape->winner[static_cast<std::size_t>(s) * kPixels + p] = best;
    }
  }
  return out;
}

template <typename Scalar>
nn::Tensor<Scalar> reconstruct_backward(const nn::Network& extractor_net, const nn::Weights<Scalar>& extractor_weights,
                                        const nn::Network& decoder_net, const nn::Weights<Scalar>& decoder_weights,
                                        const ReconstructionTape<Scalar>& tape, const nn::Tensor<Scalar>& grad,
                                        nn::Gradients<Scalar>* extractor_grads) {
  const int n = tape.batch;
  if (grad.size() != static_cast<Eigen::Index>(n) * kPixels)
    throw StructuralError("extractor: gradient does not match the recorded batch");
  nn::Tensor<Scalar> stroke_grad({n * kStrokesPerGlyph, kImageSize, kImageSize, 1});
  for (int s = 0; s < n; ++s) {
    Scalar* base = stroke_grad.raw() + static_cast<Eigen::Index>(s) * kStrokesPerGlyph * kPixels;
    const Scalar* g = grad.raw() + static_cast<Eigen::Index>(s) * kPixels;
    for (int p = 0; p < kPixels; ++p) base[tape.winner[static_cast<std::size_t>(s) * kPixels + p] * kPixels + p] = g[p];
  }
  auto param_grad = nn::backward(decoder_net, decoder_weights, tape.decoder, stroke_grad,
                                 static_cast<nn::Gradients<Scalar>*>(nullptr));
  return nn::backward(extractor_net, extractor_weights, tape.extractor,
                      std::move(param_grad).reshaped({n, kGlyphParams}), extractor_grads);
}

template nn::Tensor<float> reconstruct_forward(const nn::Network&, const nn::Weights<float>&, const nn::Network&,
                                               const nn::Weights<float>&, const nn::Tensor<float>&,
                                               ReconstructionTape<float>*);
template nn::Tensor<double> reconstruct_forward(const nn::Network&, const nn::Weights<double>&, const nn::Network&,
                                                const nn::Weights<double>&, const nn::Tensor<double>&,
                                                ReconstructionTape<double>*);
template nn::Tensor<float> reconstruct_backward(const nn::Network&, const nn::Weights<float>&, const nn::Network&,
                                                const nn::Weights<float>&, const ReconstructionTape<float>&,
                                                const nn::Tensor<float>&, nn::Gradients<float>*);
template nn::Tensor<double> reconstruct_backward(const nn::Network&, const nn::Weights<double>&, const nn::Network&,
                                                 const nn::Weights<double>&, const ReconstructionTape<double>&,
                                                 const nn::Tensor<double>&, nn::Gradients<double>*);

nn::Tensor<float> reconstruct_batch(const Extractor& extractor, const Decoder& decoder,
                                    const nn::Tensor<float>& images, ReconstructionTape<float>* tape) {
  require_weights(extractor, "extractor");
  require_weights(decoder, "decoder");
  return reconstruct_forward(extractor.net, extractor.weights, decoder.net, decoder.weights, images, tape);
}

nn::Tensor<float> reconstruct_backward(const Extractor& extractor, const Decoder& decoder,
                                       const ReconstructionTape<float>& tape, const nn::Tensor<float>& grad,
                                       nn::Gradients<float>* extractor_grads) {
  return reconstruct_backward(extractor.net, extractor.weights, decoder.net, decoder.weights, tape, grad,
                              extractor_grads);
}

GrayImage reconstruct(const Extractor& extractor, const Decoder& decoder, const RgbImage& image) {
  const RgbImage one[] = {image};
  return image_from_tensor(reconstruct_batch(extractor, decoder, rgb_tensor(one)), 0);
}

GrayImage render_with_decoder(const Decoder& decoder, const StrokeSet& strokes) {
  const auto images = decode_batch(decoder, params_tensor(strokes));
  GrayImage out = image_from_tensor(images, 0);
  for (int k = 1; k < kStrokesPerGlyph; ++k) out = out.max(image_from_tensor(images, k));
  return out;
}

double reconstruction_loss(const Extractor& extractor, const Decoder& decoder, const nn::Tensor<float>& distorted,
                           const nn::Tensor<float>& clean) {
  const int n = distorted.dim(0);
  if (n == 0 || clean.dim(0) != n) throw DomainError("extractor: image/target count mismatch");
  constexpr int kChunk = 64;
  double total = 0;
  for (int i = 0; i < n; i += kChunk) {
    std::vector<int> idx(std::min(kChunk, n - i));
    std::iota(idx.begin(), idx.end(), i);
    const auto pred = reconstruct_batch(extractor, decoder, nn::gather(distorted, idx));
    total += (pred.data() - nn::gather(clean, idx).data()).cast<double>().squaredNorm();
  }
  return total / (static_cast<double>(n) * kPixels);
}

ExtractorTrainResult train_extractor(const nn::Tensor<float>& distorted, const nn::Tensor<float>& clean,
                                     const nn::Tensor<float>& held_out_distorted,
                                     const nn::Tensor<float>& held_out_clean, const Decoder& decoder,
                                     const ExtractorTrainConfig& config,
                                     const std::function<void(const ExtractorLogEntry&)>& on_log) {
  config.train.validate();
  require_weights(decoder, "decoder");
  const int n = distorted.dim(0);
  if (n == 0 || clean.dim(0) != n) throw DomainError("extractor: training set is empty or mismatched");

  const Rng root(config.train.seed);
  ExtractorTrainResult result;
  auto& ext = result.extractor;
  ext.net = extractor_network(config.profile);
  ext.weights = nn::init_weights<float>(ext.net, root.substream("extractor.init").next());
  const bool has_held_out = held_out_distorted.size() > 0;
  auto held_out = [&] { return reconstruction_loss(ext, decoder, held_out_distorted, held_out_clean); };
  result.initial_held_out_loss = has_held_out ? held_out() : 0.0;

  BatchSampler sampler(root.substream("extractor.shuffle"), n, config.train.batch_size);
  ReconstructionTape<float> tape;
  nn::Gradients<float> grads;
  for (long step = 0; step < config.train.total_steps; ++step) {
    const auto idx = sampler.next();
    const auto pred = reconstruct_batch(ext, decoder, nn::gather(distorted, idx), &tape);
    const auto loss = nn::mse_loss(pred, nn::gather(clean, idx));
    if (!std::isfinite(loss.value)) throw TrainingError("extractor: non-finite loss", step);
    reconstruct_backward(ext, decoder, tape, loss.gradient, &grads);
    nn::sgd_momentum_step(ext.weights, grads, config.train, step);

    const bool last = step + 1 == config.train.total_steps;
    if (step == 0 || last || (config.log_every > 0 && (step + 1) % config.log_every == 0)) {
      ExtractorLogEntry entry{step, nn::learning_rate_at(config.train, step), loss.value,
                              has_held_out ? held_out() : loss.value};
      result.log.push_back(entry);
      if (on_log) on_log(entry);
    }
  }
  return result;
}

Classifier train_classifier(const nn::Network& net, const nn::Tensor<float>& inputs, std::span<const int> labels,
                            const ClassifierTrainConfig& config) {
  config.train.validate();
  const int n = inputs.dim(0);
  if (n == 0 || static_cast<std::size_t>(n) != labels.size())
    throw DomainError("classifier: training set is empty or mismatched");
  for (int y : labels)
    if (y < 0 || y >= net.output_shape().at(0)) throw DomainError("classifier: label out of range");

  const Rng root(config.train.seed);
  Classifier model{net, nn::init_weights<float>(net, root.substream("classifier.init").next())};
  BatchSampler sampler(root.substream("classifier.shuffle"), n, config.train.batch_size);
  nn::Tape<float> tape;
  nn::Gradients<float> grads;
  std::vector<int> batch_labels;
  for (long step = 0; step < config.train.total_steps; ++step) {
    const auto idx = sampler.next();
    batch_labels.clear();
    for (int i : idx) batch_labels.push_back(labels[i]);
    const auto logits = nn::forward(model.net, model.weights, nn::gather(inputs, idx), &tape);
    const auto loss = nn::softmax_cross_entropy(logits, batch_labels);
    if (!std::isfinite(loss.value)) throw TrainingError("classifier: non-finite loss", step);
    nn::backward(model.net, model.weights, tape, loss.gradient, &grads);
    nn::sgd_momentum_step(model.weights, grads, config.train, step);
  }
  return model;
}

Classifier train_classifier_head(const nn::Tensor<float>& stroke_params, std::span<const int> labels,
                                 const ClassifierTrainConfig& config) {
  return train_classifier(classifier_head_network(), stroke_params, labels, config);
}

Classifier train_baseline_classifier(const nn::Tensor<float>& images, std::span<const int> labels,
                                     const ClassifierTrainConfig& config) {
  return train_classifier(baseline_network(), images, labels, config);
}

nn::Tensor<float> class_probabilities(const Classifier& model, const nn::Tensor<float>& inputs) {
  require_weights(model, "classifier");
  constexpr int kChunk = 128;
  const int n = inputs.dim(0);
  nn::Tensor<float> out({n, kClasses});
  for (int i = 0; i < n; i += kChunk) {
    std::vector<int> idx(std::min(kChunk, n - i));
    std::iota(idx.begin(), idx.end(), i);
    const auto p = nn::softmax(nn::forward(model.net, model.weights, nn::gather(inputs, idx)));
    out.data().segment(static_cast<Eigen::Index>(i) * kClasses, p.size()) = p.data();
  }
  return out;
}

std::vector<int> predict(const Classifier& model, const nn::Tensor<float>& inputs) {
  return nn::argmax_rows(class_probabilities(model, inputs));
}

std::array<double, kClasses> classify(const Classifier& head, const StrokeSet& strokes) {
  const auto flat = flatten(strokes);
  nn::Tensor<float> x({1, kGlyphParams});
  for (int i = 0; i < kGlyphParams; ++i) x[i] = static_cast<float>(flat[i]);
  require_weights(head, "classifier");
  const auto p = nn::softmax(nn::forward(head.net, head.weights.cast<double>(), x.cast<double>()));
  std::array<double, kClasses> out{};
  for (int k = 0; k < kClasses; ++k) out[k] = p[k];
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size() || labels.empty()) throw DomainError("accuracy: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace scr
