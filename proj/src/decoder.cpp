#include "scr/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "scr/errors.hpp"
#include "scr/nn/loss.hpp"
#include "scr/rng.hpp"

namespace scr {

nn::Network decoder_network(Profile profile) {
  using namespace nn;
  const int f1 = scaled(profile, 512), f2 = scaled(profile, 1024), f3 = scaled(profile, 2048);
  const int ch = scaled(profile, 16);
  return Network({kParamsPerStroke}, {
      fully_connected(kParamsPerStroke, f1), relu(),
      fully_connected(f1, f2), relu(),
      fully_connected(f2, f3), relu(),
      fully_connected(f3, 16 * 16 * ch), relu(),
      reshape({16, 16, ch}),
      upsample2x(), conv3x3(ch, ch), relu(), conv3x3(ch, ch), relu(),
      upsample2x(), conv3x3(ch, ch), relu(), conv3x3(ch, 1),
      sigmoid(),
  });
}

nn::Tensor<float> params_tensor(std::span<const WQBCParams> params) {
  nn::Tensor<float> t({static_cast<int>(params.size()), kParamsPerStroke});
  for (std::size_t i = 0; i < params.size(); ++i)
    t.matrix().row(static_cast<Eigen::Index>(i)) = params[i].flat().cast<float>().transpose();
  return t;
}

nn::Tensor<float> images_tensor(std::span<const GrayImage> images) {
  nn::Tensor<float> t({static_cast<int>(images.size()), kImageSize, kImageSize, 1});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].rows() != kImageSize || images[i].cols() != kImageSize)
      throw DomainError("decoder: target images must be 64x64");
    t.matrix().row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(images[i].data(), kImageSize * kImageSize);
  }
  return t;
}

GrayImage image_from_tensor(const nn::Tensor<float>& t, int index) {
  return Eigen::Map<const GrayImage>(t.raw() + static_cast<Eigen::Index>(index) * kImageSize * kImageSize, kImageSize,
                                     kImageSize);
}

std::vector<GrayImage> rasterize_all(std::span<const WQBCParams> params, StepCount steps, int workers) {
  std::vector<GrayImage> out(params.size());
  const int n = static_cast<int>(params.size());
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) out[i] = rasterize_stroke(params[i], steps);
    return out;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) out[i] = rasterize_stroke(params[i], steps);
    });
  return out;
}

std::vector<WQBCParams> sample_uniform_params(Rng& rng, int n) {
  std::vector<WQBCParams> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    WQBCParams::Vector v;
    for (int k = 0; k < kParamsPerStroke; ++k) v[k] = rng.uniform();
    out.emplace_back(v);
  }
  return out;
}

nn::Tensor<float> decode_batch(const Decoder& decoder, const nn::Tensor<float>& params) {
  if (decoder.weights.empty()) throw UsageError("decoder: no weights loaded");
  try {
    nn::check_compatible(decoder.net, decoder.weights);
  } catch (const StructuralError& e) {
    throw UsageError(std::string("decoder: ") + e.what());
  }
  return nn::forward(decoder.net, decoder.weights, params);
}

GrayImage decode(const Decoder& decoder, const WQBCParams& params) {
  const WQBCParams one[] = {params};
  return image_from_tensor(decode_batch(decoder, params_tensor(one)), 0);
}

double decoder_mse(const Decoder& decoder, std::span<const WQBCParams> params, std::span<const GrayImage> targets) {
  if (params.size() != targets.size() || params.empty()) throw DomainError("decoder: params/targets mismatch");
  constexpr std::size_t kChunk = 64;
  double total = 0;
  for (std::size_t i = 0; i < params.size(); i += kChunk) {
    const std::size_t n = std::min(kChunk, params.size() - i);
    const auto pred = decode_batch(decoder, params_tensor(params.subspan(i, n)));
    const auto target = images_tensor(targets.subspan(i, n));
    total += (pred.data() - target.data()).template cast<double>().squaredNorm();
  }
  return total / (static_cast<double>(params.size()) * kImageSize * kImageSize);
}

DecoderTrainResult train_decoder(const DecoderTrainConfig& config,
                                 const std::function<void(const LossLogEntry&)>& on_log) {
  config.train.validate();
  const StepCount steps(config.raster_steps);
  const Rng root(config.train.seed);
  Rng data_rng = root.substream("decoder.data");
  Rng val_rng = root.substream("decoder.validation");

  DecoderTrainResult result;
  result.decoder.net = decoder_network(config.profile);
  result.decoder.weights = nn::init_weights<float>(result.decoder.net, root.substream("decoder.init").next());
  if (config.train.total_steps == 0) return result;

  const auto val_params = sample_uniform_params(val_rng, config.validation_size);
  const auto val_targets = rasterize_all(val_params, steps, config.workers);

  auto& dec = result.decoder;
  nn::Tape<float> tape;
  nn::Gradients<float> grads;
  for (long step = 0; step < config.train.total_steps; ++step) {
    const auto params = sample_uniform_params(data_rng, config.train.batch_size);
    const auto targets = rasterize_all(params, steps, config.workers);
    const auto pred = nn::forward(dec.net, dec.weights, params_tensor(params), &tape);
    const auto loss = nn::mse_loss(pred, images_tensor(targets));
    if (!std::isfinite(loss.value)) throw TrainingError("decoder: non-finite loss", step);
    nn::backward(dec.net, dec.weights, tape, loss.gradient, &grads);
    nn::sgd_momentum_step(dec.weights, grads, config.train, step);

    const bool last = step + 1 == config.train.total_steps;
    if (step == 0 || last || (config.log_every > 0 && (step + 1) % config.log_every == 0)) {
      LossLogEntry entry{step, nn::learning_rate_at(config.train, step), loss.value,
                         config.validation_size > 0 ? decoder_mse(dec, val_params, val_targets) : loss.value};
      result.log.push_back(entry);
      if (on_log) on_log(entry);
    }
  }
  return result;
}

}  // namespace scr
