#pragma once

#include <cstdint>

#include "scr/nn/network.hpp"

namespace scr::nn {

struct TrainConfig {
  double learning_rate = 3e-2;
  double momentum = 0.9;
  long total_steps = 1000;
  int batch_size = 32;
  std::uint64_t seed = 0;

  /// Throws DomainError unless lr > 0, 0 <= momentum < 1, steps >= 0, batch >= 1.
  void validate() const;
};

/// Base rate, divided by 10 from step ceil(total / 3) and again from ceil(2 total / 3).
double learning_rate_at(const TrainConfig& config, long step);

/// v <- momentum * v + g;  w <- w - lr(step) * v.
/// Throws TrainingError on non-finite gradients (weights untouched).
template <typename Scalar>
void sgd_momentum_step(Weights<Scalar>& weights, const Gradients<Scalar>& grads, const TrainConfig& config,
                       long step);

}  // namespace scr::nn
