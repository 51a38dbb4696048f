#pragma once

#include <functional>
#include <span>
#include <vector>

#include "scr/image.hpp"
#include "scr/nn/network.hpp"
#include "scr/nn/optim.hpp"
#include "scr/profile.hpp"
#include "scr/rasterizer.hpp"
#include "scr/rng.hpp"
#include "scr/stroke.hpp"

namespace scr {

/// [9] -> FC 512 -> FC 1024 -> FC 2048 -> FC 4096 -> [16,16,16]
///     -> upsample, conv, conv [32,32,16] -> upsample, conv, conv [64,64,1] -> sigmoid
/// with ReLU between hidden layers. The mini profile quarters every width.
nn::Network decoder_network(Profile profile);

using Decoder = nn::Model;

/// Renders one stroke. Throws UsageError if the weights do not fit the network.
GrayImage decode(const Decoder& decoder, const WQBCParams& params);

/// Batched decode of [N, 9] parameters into [N, 64, 64, 1] images.
nn::Tensor<float> decode_batch(const Decoder& decoder, const nn::Tensor<float>& params);

/// Packs parameters into a [N, 9] tensor and rasterized targets into [N, 64, 64, 1].
nn::Tensor<float> params_tensor(std::span<const WQBCParams> params);
nn::Tensor<float> images_tensor(std::span<const GrayImage> images);
GrayImage image_from_tensor(const nn::Tensor<float>& t, int index);

/// Rasterizes every parameter vector; optionally across `workers` threads
/// (output is independent of the worker count).
std::vector<GrayImage> rasterize_all(std::span<const WQBCParams> params, StepCount steps, int workers = 1);

/// Draws n parameter vectors uniformly from [0,1]^9.
std::vector<WQBCParams> sample_uniform_params(Rng& rng, int n);

struct DecoderTrainConfig {
  nn::TrainConfig train{.total_steps = 20000, .batch_size = 32};
  Profile profile = Profile::mini;
  int raster_steps = kDefaultSteps;
  int validation_size = 512;
  /// Validation loss is logged every this many steps (and at the last step).
  long log_every = 500;
  int workers = 1;
};

struct LossLogEntry {
  long step;
  double learning_rate;
  double train_loss;
  double validation_loss;
};

struct DecoderTrainResult {
  Decoder decoder;
  std::vector<LossLogEntry> log;
};

/// Regression of the decoder onto the reference rasterizer with freshly sampled
/// uniform parameters each step. Throws TrainingError on a non-finite loss.
DecoderTrainResult train_decoder(const DecoderTrainConfig& config,
                                 const std::function<void(const LossLogEntry&)>& on_log = {});

/// Mean squared pixel error of the decoder against targets.
double decoder_mse(const Decoder& decoder, std::span<const WQBCParams> params, std::span<const GrayImage> targets);

}  // namespace scr
