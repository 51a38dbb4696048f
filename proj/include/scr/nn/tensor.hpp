#pragma once

#include <functional>
#include <numeric>
#include <string>
#include <vector>
#include <Eigen/Core>

#include "scr/errors.hpp"

namespace scr::nn {

using Shape = std::vector<int>;

/// Element count; an empty shape denotes an empty tensor.
inline Eigen::Index shape_size(const Shape& s) {
  if (s.empty()) return 0;
  return std::accumulate(s.begin(), s.end(), Eigen::Index{1}, std::multiplies<>());
}

std::string to_string(const Shape& s);

/// Dense row-major tensor. Activations are laid out [N, H, W, C] or [N, F]
/// with the batch dimension first.
template <typename Scalar>
class Tensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Vector::Zero(shape_size(shape_))) {}
  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_))
      throw StructuralError("tensor: " + std::to_string(data_.size()) + " values do not fit shape " +
                            to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  int dim(std::size_t i) const { return shape_.at(i); }
  int rank() const { return static_cast<int>(shape_.size()); }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }
  Scalar* raw() { return data_.data(); }
  const Scalar* raw() const { return data_.data(); }
  Scalar& operator[](Eigen::Index i) { return data_[i]; }
  Scalar operator[](Eigen::Index i) const { return data_[i]; }

  /// Leading dimension by the product of the rest.
  Eigen::Map<RowMatrix> matrix() { return {data_.data(), shape_.at(0), data_.size() / shape_.at(0)}; }
  Eigen::Map<const RowMatrix> matrix() const {
    return {data_.data(), shape_.at(0), data_.size() / shape_.at(0)};
  }

  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
  Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.allFinite(); }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  Vector data_;
};

}  // namespace scr::nn
