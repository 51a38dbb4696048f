#include "scr/nn/optim.hpp"

#include <cmath>

namespace scr::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw DomainError("train: learning_rate must be > 0");
  if (!(momentum >= 0 && momentum < 1)) throw DomainError("train: momentum must lie in [0, 1)");
  if (total_steps < 0) throw DomainError("train: total_steps must be >= 0");
  if (batch_size < 1) throw DomainError("train: batch_size must be >= 1");
}

double learning_rate_at(const TrainConfig& config, long step) {
  const long first = (config.total_steps + 2) / 3;
  const long second = (2 * config.total_steps + 2) / 3;
  double lr = config.learning_rate;
  if (config.total_steps > 0 && step >= first) lr /= 10.0;
  if (config.total_steps > 0 && step >= second) lr /= 10.0;
  return lr;
}

template <typename Scalar>
void sgd_momentum_step(Weights<Scalar>& weights, const Gradients<Scalar>& grads, const TrainConfig& config,
                       long step) {
  if (grads.size() != weights.params.size()) throw StructuralError("nn: gradient count does not match weights");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& p = weights.params[i];
    const auto& g = grads[i];
    if (g.weight.shape() != p.weight.shape() || g.bias.shape() != p.bias.shape())
      throw StructuralError("nn: gradient shape mismatch at layer " + std::to_string(i));
    if (!g.weight.all_finite() || !g.bias.all_finite())
      throw TrainingError("nn: non-finite gradient at layer " + std::to_string(i), step);
  }
  const auto lr = static_cast<Scalar>(learning_rate_at(config, step));
  const auto mu = static_cast<Scalar>(config.momentum);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& p = weights.params[i];
    auto& v = weights.velocity[i];
    v.weight.data() = mu * v.weight.data() + grads[i].weight.data();
    v.bias.data() = mu * v.bias.data() + grads[i].bias.data();
    p.weight.data() -= lr * v.weight.data();
    p.bias.data() -= lr * v.bias.data();
  }
  ++weights.version;
}

template void sgd_momentum_step(Weights<float>&, const Gradients<float>&, const TrainConfig&, long);
template void sgd_momentum_step(Weights<double>&, const Gradients<double>&, const TrainConfig&, long);

}  // namespace scr::nn
