#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "avasd/core/error.hpp"

namespace avasd {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major n-dimensional array. The element type fixes the precision
/// of the store: Tensor<double> for training and oracles, Tensor<float> for
/// the latency path.
///
/// A default-constructed tensor is an empty placeholder (rank 0, no data);
/// every constructed tensor has rank >= 1 and all extents >= 1.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
    validate_extents();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_extents();
    if (shape_size(shape_) != data_.size()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
    }
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
      throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                       shape_to_string(shape_));
    }
    return shape_[axis];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& vector() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  template <typename... Idx>
  T& operator()(Idx... idx) noexcept {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  const T& operator()(Idx... idx) const noexcept {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const noexcept {
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) off = off * shape_[axis++] + i;
    return off;
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  void reshape(Shape shape) {
    Tensor probe;
    probe.shape_ = shape;
    probe.validate_extents();
    if (shape_size(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " +
                       shape_to_string(shape));
    }
    shape_ = std::move(shape);
  }

  Tensor reshaped(Shape shape) const& {
    Tensor copy = *this;
    copy.reshape(std::move(shape));
    return copy;
  }
  Tensor reshaped(Shape shape) && {
    reshape(std::move(shape));
    return std::move(*this);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(),
                   [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void validate_extents() const {
    if (shape_.empty()) throw ShapeError("tensor rank must be at least 1");
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (shape_[i] == 0) {
        throw ShapeError("extent of axis " + std::to_string(i) + " is zero in shape " +
                         shape_to_string(shape_));
      }
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

}  // namespace avasd
