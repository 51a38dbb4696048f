#include "scr/nn/loss.hpp"

#include <cmath>

namespace scr::nn {

template <typename Scalar>
LossResult<Scalar> mse_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  if (pred.shape() != target.shape())
    throw StructuralError("nn: mse shapes differ: " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
  const auto n = static_cast<Scalar>(pred.size());
  const auto diff = (pred.data() - target.data()).eval();
  return {diff.squaredNorm() / n, Tensor<Scalar>(pred.shape(), (Scalar(2) / n) * diff)};
}

template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits) {
  Tensor<Scalar> out = logits;
  auto m = out.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    row.array() = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return out;
}

template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const Tensor<Scalar>& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || static_cast<std::size_t>(logits.dim(0)) != labels.size())
    throw StructuralError("nn: cross-entropy expects [N, K] logits and N labels");
  const int N = logits.dim(0), K = logits.dim(1);
  Tensor<Scalar> grad = softmax(logits);
  auto g = grad.matrix();
  const auto z = logits.matrix();
  Scalar total = 0;
  for (int r = 0; r < N; ++r) {
    const int y = labels[r];
    if (y < 0 || y >= K) throw StructuralError("nn: label " + std::to_string(y) + " outside [0, K)");
    const Scalar mx = z.row(r).maxCoeff();
    const Scalar lse = mx + std::log((z.row(r).array() - mx).exp().sum());
    total += lse - z(r, y);
    g(r, y) -= Scalar(1);
  }
  g /= static_cast<Scalar>(N);
  return {total / static_cast<Scalar>(N), std::move(grad)};
}

template <typename Scalar>
std::vector<int> argmax_rows(const Tensor<Scalar>& scores) {
  const auto m = scores.matrix();
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c)
      if (m(r, c) > m(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

#define SCR_INSTANTIATE(S)                                                               \
  template LossResult<S> mse_loss(const Tensor<S>&, const Tensor<S>&);                   \
  template Tensor<S> softmax(const Tensor<S>&);                                          \
  template LossResult<S> softmax_cross_entropy(const Tensor<S>&, std::span<const int>); \
  template std::vector<int> argmax_rows(const Tensor<S>&);

SCR_INSTANTIATE(float)
SCR_INSTANTIATE(double)
#undef SCR_INSTANTIATE

}  // namespace scr::nn
