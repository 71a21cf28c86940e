/* Copyright 2026 The geosyn Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GEOSYN_CORE_TENSOR_H_
#define GEOSYN_CORE_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace geosyn {

// Dense row-major tensor. Copies share the underlying storage (use clone()
// for a deep copy); ops never mutate their inputs, so sharing is safe.
// Layout convention for 4-d tensors is NCHW, for conv weights OIHW.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)),
        store_(std::make_shared<std::vector<T>>(count(shape_), T(0))) {}

  Tensor(std::initializer_list<int64_t> shape)
      : Tensor(std::vector<int64_t>(shape)) {}

  static Tensor full(std::vector<int64_t> shape, T v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  static Tensor from(std::vector<int64_t> shape, std::vector<T> values) {
    if (count(shape) != static_cast<int64_t>(values.size()))
      throw std::invalid_argument("Tensor::from: shape/value count mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.store_ = std::make_shared<std::vector<T>>(std::move(values));
    return t;
  }

  bool defined() const { return store_ != nullptr; }
  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(i); }
  int64_t numel() const { return store_ ? static_cast<int64_t>(store_->size()) : 0; }

  T* data() { return store_->data(); }
  const T* data() const { return store_->data(); }

  T& operator[](int64_t i) { return (*store_)[i]; }
  const T& operator[](int64_t i) const { return (*store_)[i]; }

  // Index into an NCHW tensor.
  T& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
    return (*store_)[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return (*store_)[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  void fill(T v) { std::fill(store_->begin(), store_->end(), v); }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.store_ = std::make_shared<std::vector<T>>(*store_);
    return t;
  }

  // Same storage, different shape.
  Tensor reshaped(std::vector<int64_t> shape) const {
    if (count(shape) != numel())
      throw std::invalid_argument("Tensor::reshaped: numel mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.store_ = store_;
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool shares_storage(const Tensor& o) const { return store_ == o.store_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i)
      os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
  }

  static int64_t count(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int64_t> shape_;
  std::shared_ptr<std::vector<T>> store_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;
using TensorI = Tensor<int32_t>;

}  // namespace geosyn

#endif  // GEOSYN_CORE_TENSOR_H_
