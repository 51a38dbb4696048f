#pragma once

#include <span>
#include <vector>

#include "scr/nn/tensor.hpp"

namespace scr::nn {

template <typename Scalar>
struct LossResult {
  Scalar value;
  Tensor<Scalar> gradient;
};

/// Mean over every element of (pred - target)^2; gradient 2 (pred - target) / N.
template <typename Scalar>
LossResult<Scalar> mse_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target);

/// Row-wise softmax of [N, K] logits.
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits);

/// Batch-mean cross-entropy of softmax(logits) against integer labels.
template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const Tensor<Scalar>& logits, std::span<const int> labels);

/// Index of the row maximum (first on ties).
template <typename Scalar>
std::vector<int> argmax_rows(const Tensor<Scalar>& scores);

}  // namespace scr::nn
