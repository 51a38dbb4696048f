#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "scr/decoder.hpp"
#include "scr/image.hpp"
#include "scr/nn/network.hpp"
#include "scr/nn/optim.hpp"
#include "scr/profile.hpp"
#include "scr/stroke.hpp"

namespace scr {

inline constexpr int kClasses = 10;

/// VGG-style encoder on [64,64,3]: four blocks of (conv, relu, conv, relu,
/// maxpool) with 16/32/64/128 channels, flatten to 2048, FC 256, FC 36, sigmoid.
/// The mini profile quarters channels and hidden width.
nn::Network extractor_network(Profile profile);

/// [36] -> FC 256 -> relu -> FC 10 (logits; softmax applied by the caller).
nn::Network classifier_head_network();

/// Recognizer on raw [64,64,3] images: three (conv, relu, maxpool) blocks with
/// 16/32/64 channels, FC 128, FC 10 logits.
nn::Network baseline_network();

using Extractor = nn::Model;
using Classifier = nn::Model;

/// [N, 64, 64, 3] tensor from RGB images.
nn::Tensor<float> rgb_tensor(std::span<const RgbImage> images);
RgbImage rgb_from_tensor(const nn::Tensor<float>& t, int index);

/// [N, 36] stroke parameters, each in (0,1). Throws UsageError for missing weights.
nn::Tensor<float> extract_batch(const Extractor& extractor, const nn::Tensor<float>& images);
StrokeSet extract(const Extractor& extractor, const RgbImage& image);

/// Records both networks and the stroke-wise argmax of the max composition.
template <typename Scalar>
struct ReconstructionTape {
  nn::Tape<Scalar> extractor;
  nn::Tape<Scalar> decoder;
  std::vector<std::uint8_t> winner;  // argmax stroke per output pixel (first index on ties)
  int batch = 0;
};

/// Extract, decode each of the four strokes, compose by pixelwise max: [N, 64, 64, 1].
template <typename Scalar>
nn::Tensor<Scalar> reconstruct_forward(const nn::Network& extractor_net, const nn::Weights<Scalar>& extractor_weights,
                                       const nn::Network& decoder_net, const nn::Weights<Scalar>& decoder_weights,
                                       const nn::Tensor<Scalar>& images, ReconstructionTape<Scalar>* tape = nullptr);

/// Routes the image gradient to the winning stroke, through the frozen decoder
/// (no decoder parameter gradients) and the extractor. Fills `extractor_grads`
/// when non-null; returns the gradient with respect to the input images.
template <typename Scalar>
nn::Tensor<Scalar> reconstruct_backward(const nn::Network& extractor_net, const nn::Weights<Scalar>& extractor_weights,
                                        const nn::Network& decoder_net, const nn::Weights<Scalar>& decoder_weights,
                                        const ReconstructionTape<Scalar>& tape, const nn::Tensor<Scalar>& grad,
                                        nn::Gradients<Scalar>* extractor_grads);

nn::Tensor<float> reconstruct_batch(const Extractor& extractor, const Decoder& decoder,
                                    const nn::Tensor<float>& images, ReconstructionTape<float>* tape = nullptr);
nn::Tensor<float> reconstruct_backward(const Extractor& extractor, const Decoder& decoder,
                                       const ReconstructionTape<float>& tape, const nn::Tensor<float>& grad,
                                       nn::Gradients<float>* extractor_grads);

GrayImage reconstruct(const Extractor& extractor, const Decoder& decoder, const RgbImage& image);

/// Decodes a given stroke set and composes it (the reconstruction path after extraction).
GrayImage render_with_decoder(const Decoder& decoder, const StrokeSet& strokes);

struct ExtractorTrainConfig {
  nn::TrainConfig train{.total_steps = 3000, .batch_size = 32};
  Profile profile = Profile::mini;
  long log_every = 250;
};

struct ExtractorLogEntry {
  long step;
  double learning_rate;
  double train_loss;
  double held_out_loss;
};

struct ExtractorTrainResult {
  Extractor extractor;
  double initial_held_out_loss = 0;
  std::vector<ExtractorLogEntry> log;
};

/// Minimizes the mean squared error between reconstruct(distorted) and the
/// clean mask with the decoder frozen. `distorted` is [N,64,64,3], `clean`
/// [N,64,64,1]; the held-out pair is evaluated at step 0 and at every log point.
ExtractorTrainResult train_extractor(const nn::Tensor<float>& distorted, const nn::Tensor<float>& clean,
                                     const nn::Tensor<float>& held_out_distorted,
                                     const nn::Tensor<float>& held_out_clean, const Decoder& decoder,
                                     const ExtractorTrainConfig& config,
                                     const std::function<void(const ExtractorLogEntry&)>& on_log = {});

/// Mean squared reconstruction error over a set.
double reconstruction_loss(const Extractor& extractor, const Decoder& decoder, const nn::Tensor<float>& distorted,
                           const nn::Tensor<float>& clean);

struct ClassifierTrainConfig {
  nn::TrainConfig train{.learning_rate = 1e-2, .total_steps = 2000, .batch_size = 32};
};

/// Cross-entropy training of any logits network on [N, ...] inputs. Batches are
/// drawn from a seeded per-epoch permutation.
Classifier train_classifier(const nn::Network& net, const nn::Tensor<float>& inputs, std::span<const int> labels,
                            const ClassifierTrainConfig& config);

Classifier train_classifier_head(const nn::Tensor<float>& stroke_params, std::span<const int> labels,
                                 const ClassifierTrainConfig& config);
Classifier train_baseline_classifier(const nn::Tensor<float>& images, std::span<const int> labels,
                                     const ClassifierTrainConfig& config);

/// Softmax class distribution for one stroke set.
std::array<double, kClasses> classify(const Classifier& head, const StrokeSet& strokes);

/// Softmax distributions [N, 10] and argmax labels for a batch.
nn::Tensor<float> class_probabilities(const Classifier& model, const nn::Tensor<float>& inputs);
std::vector<int> predict(const Classifier& model, const nn::Tensor<float>& inputs);

double accuracy(std::span<const int> predicted, std::span<const int> labels);

}  // namespace scr
