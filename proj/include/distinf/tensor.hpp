/*
 * Copyright 2026 The distinf Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "distinf/error.hpp"

namespace distinf {

using Shape = std::vector<std::size_t>;

inline std::size_t ShapeSize(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

inline void RequireShape(const Shape& expected, const Shape& actual,
                         std::string_view what) {
  if (expected != actual) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(what) + ": expected " + ShapeToString(expected) +
                    ", got " + ShapeToString(actual));
  }
}

// Dense row-major array of doubles. Every dimension is positive and the
// element count always equals the product of the shape.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    CheckDims();
    data_.assign(ShapeSize(shape_), 0.0);
  }

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    CheckDims();
    if (data_.size() != ShapeSize(shape_)) {
      throw Error(ErrorKind::kShapeMismatch,
                  "tensor data length " + std::to_string(data_.size()) +
                      " does not match shape " + ShapeToString(shape_));
    }
  }

  static Tensor Vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  static Tensor Filled(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // 3-D accessors for C x H x W activations.
  double at(std::size_t c, std::size_t r, std::size_t col) const {
    return data_[(c * shape_[1] + r) * shape_[2] + col];
  }
  double& at(std::size_t c, std::size_t r, std::size_t col) {
    return data_[(c * shape_[1] + r) * shape_[2] + col];
  }

  Tensor Reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
  }

  bool AllFinite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  void CheckDims() const {
    for (std::size_t d : shape_) {
      if (d == 0) {
        throw Error(ErrorKind::kShapeMismatch,
                    "tensor dimensions must be positive, got " +
                        ShapeToString(shape_));
      }
    }
  }

  Shape shape_;
  std::vector<double> data_;
};

inline void RequireFinite(const Tensor& t, std::string_view what) {
  if (!t.AllFinite()) {
    throw Error(ErrorKind::kNonFinite,
                std::string(what) + " produced a non-finite value");
  }
}

inline Tensor operator-(const Tensor& a, const Tensor& b) {
  RequireShape(a.shape(), b.shape(), "tensor subtraction");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  RequireShape(a.shape(), b.shape(), "tensor addition");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline Tensor operator*(double s, const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

inline Tensor Hadamard(const Tensor& a, const Tensor& b) {
  RequireShape(a.shape(), b.shape(), "elementwise product");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// out += w * a, in place.
inline void Axpy(double w, const Tensor& a, Tensor& out) {
  RequireShape(out.shape(), a.shape(), "accumulation");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += w * a[i];
}

inline double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  RequireShape(a.shape(), b.shape(), "comparison");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace distinf
