#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hrcam/errors.hpp"

namespace hrcam {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// Dense row-major array. Rank 0 is not used; every extent is positive.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
    check_extents();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (data_.size() != shape_size(shape_)) {
      throw InvalidInput("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 and rank-4 element access; no bounds checks beyond the vector's.
  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h,
              std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
      throw InvalidInput("cannot reshape " + shape_string(shape_) + " to " +
                         shape_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_extents() const {
    for (auto e : shape_) {
      if (e == 0) throw InvalidInput("tensor extents must be positive");
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
bool Tensor<T>::all_finite() const {
  for (T v : data_) {
    if (!(v - v == T{0})) return false;
  }
  return true;
}

// Copies sample `index` of a batch tensor [B, ...] into its own [1, ...] tensor.
template <typename T>
Tensor<T> batch_slice(const Tensor<T>& batch, std::size_t index) {
  Shape shape = batch.shape();
  const std::size_t stride = batch.size() / shape[0];
  shape[0] = 1;
  auto first = batch.data().begin() + static_cast<std::ptrdiff_t>(index * stride);
  return Tensor<T>(std::move(shape),
                   std::vector<T>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

// Stacks same-shaped tensors along a new leading axis.
template <typename T>
Tensor<T> stack(std::span<const Tensor<T>> items) {
  if (items.empty()) throw InvalidInput("stack of zero tensors");
  Shape shape{items.size()};
  for (auto e : items.front().shape()) shape.push_back(e);
  std::vector<T> data;
  data.reserve(shape_size(shape));
  for (const auto& t : items) {
    if (t.shape() != items.front().shape()) {
      throw InvalidInput("stack: mismatched shapes");
    }
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor<T>(std::move(shape), std::move(data));
}

}  // namespace hrcam
