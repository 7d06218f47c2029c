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

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "distinf/layers.hpp"
#include "distinf/tensor.hpp"

namespace distinf {

// An ordered layer pipeline ending in Softmax. Shapes are checked once at
// construction; activation_shape(k) is the shape entering layer k and
// activation_shape(layer_count()) is the output shape.
class Network {
 public:
  Network(Shape input_shape, std::vector<Layer> layers)
      : layers_(std::move(layers)) {
    if (layers_.empty() || !std::holds_alternative<Softmax>(layers_.back())) {
      throw Error(ErrorKind::kInvalidArgument,
                  "network must end with a softmax layer");
    }
    shapes_.push_back(std::move(input_shape));
    for (const Layer& layer : layers_) {
      shapes_.push_back(OutputShape(layer, shapes_.back()));
    }
  }

  const Shape& input_shape() const { return shapes_.front(); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t layer_count() const { return layers_.size(); }
  std::size_t output_dim() const { return shapes_.back()[0]; }
  const Shape& activation_shape(std::size_t k) const { return shapes_.at(k); }

  // Applies layers [begin, end) to `z`, which must have activation_shape(begin).
  Tensor ForwardRange(Tensor z, std::size_t begin, std::size_t end) const {
    RequireShape(shapes_.at(begin), z.shape(), "activation");
    for (std::size_t k = begin; k < end; ++k) z = LayerForward(layers_[k], z);
    return z;
  }

  Tensor Forward(const Tensor& x) const {
    return ForwardRange(x, 0, layers_.size());
  }

  Tensor Logits(const Tensor& x) const {
    return ForwardRange(x, 0, layers_.size() - 1);
  }

  // Element k is the activation entering layer k; the last element is the
  // softmax output.
  std::vector<Tensor> ForwardRecorded(const Tensor& x) const {
    RequireShape(input_shape(), x.shape(), "network input");
    std::vector<Tensor> acts;
    acts.reserve(layers_.size() + 1);
    acts.push_back(x);
    for (const Layer& layer : layers_) {
      acts.push_back(LayerForward(layer, acts.back()));
    }
    return acts;
  }

  // The network made of layers [cut, end), taking activation_shape(cut).
  Network Tail(std::size_t cut) const {
    return Network(shapes_.at(cut),
                   std::vector<Layer>(layers_.begin() + cut, layers_.end()));
  }

 private:
  std::vector<Layer> layers_;
  std::vector<Shape> shapes_;
};

// A factorization f = g o h at a layer boundary: h = layers[0, cut) and
// g = layers[cut, end). Non-owning, like a span; the network must outlive it.
class Slice {
 public:
  Slice(const Network& network, std::size_t cut)
      : network_(&network), cut_(cut) {
    if (cut > network.layer_count()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "cut " + std::to_string(cut) + " exceeds layer count " +
                      std::to_string(network.layer_count()));
    }
  }

  const Network& network() const { return *network_; }
  std::size_t cut() const { return cut_; }
  const Shape& z_shape() const { return network_->activation_shape(cut_); }
  const Shape& input_shape() const { return network_->input_shape(); }
  std::size_t unit_count() const { return ShapeSize(z_shape()); }

  Tensor H(const Tensor& x) const { return network_->ForwardRange(x, 0, cut_); }
  Tensor G(const Tensor& z) const {
    return network_->ForwardRange(z, cut_, network_->layer_count());
  }

 private:
  const Network* network_;
  std::size_t cut_;
};

struct ClassOutput {
  std::size_t cls = 0;
};
struct Comparative {
  std::size_t first = 0;
  std::size_t second = 0;
};
// Projection onto one unit of the activation entering layer `layer`.
struct UnitProjection {
  std::size_t layer = 0;
  std::size_t unit = 0;
};

struct QuantityOfInterest {
  std::variant<ClassOutput, Comparative, UnitProjection> kind;
  // Class quantities read the softmax output when true, the logits otherwise.
  // Ignored for UnitProjection.
  bool post_softmax = true;

  static QuantityOfInterest Class(std::size_t i) { return {ClassOutput{i}}; }
  static QuantityOfInterest Compare(std::size_t i, std::size_t j) {
    return {Comparative{i, j}};
  }
  static QuantityOfInterest Unit(std::size_t layer, std::size_t unit) {
    return {UnitProjection{layer, unit}};
  }
  QuantityOfInterest Logits() const {
    QuantityOfInterest q = *this;
    q.post_softmax = false;
    return q;
  }
};

inline std::string QuantityToString(const QuantityOfInterest& q) {
  std::string s;
  if (const auto* c = std::get_if<ClassOutput>(&q.kind)) {
    s = "class:" + std::to_string(c->cls);
  } else if (const auto* c = std::get_if<Comparative>(&q.kind)) {
    s = "comparative:" + std::to_string(c->first) + "," +
        std::to_string(c->second);
  } else {
    const auto& u = std::get<UnitProjection>(q.kind);
    return "unit:" + std::to_string(u.layer) + "," + std::to_string(u.unit);
  }
  return q.post_softmax ? s : s + "@logits";
}

inline void ValidateQuantity(const Network& net, const QuantityOfInterest& q) {
  auto check_class = [&](std::size_t c) {
    if (c >= net.output_dim()) {
      throw Error(ErrorKind::kInvalidClassIndex,
                  "class " + std::to_string(c) + " >= output dim " +
                      std::to_string(net.output_dim()));
    }
  };
  if (const auto* c = std::get_if<ClassOutput>(&q.kind)) {
    check_class(c->cls);
  } else if (const auto* c = std::get_if<Comparative>(&q.kind)) {
    check_class(c->first);
    check_class(c->second);
    if (c->first == c->second) {
      throw Error(ErrorKind::kInvalidClassIndex,
                  "comparative quantity needs two distinct classes");
    }
  } else {
    const auto& u = std::get<UnitProjection>(q.kind);
    if (u.layer > net.layer_count() ||
        u.unit >= ShapeSize(net.activation_shape(u.layer))) {
      throw Error(ErrorKind::kInvalidUnit,
                  "unit " + std::to_string(u.unit) + " at layer " +
                      std::to_string(u.layer) + " does not exist");
    }
  }
}

namespace detail {

// Layer index whose entering activation the class quantity reads.
inline std::size_t ReadoutLayer(const Network& net,
                                const QuantityOfInterest& q) {
  if (const auto* u = std::get_if<UnitProjection>(&q.kind)) return u->layer;
  return q.post_softmax ? net.layer_count() : net.layer_count() - 1;
}

inline double ReadQuantity(const QuantityOfInterest& q, const Tensor& a) {
  if (const auto* c = std::get_if<ClassOutput>(&q.kind)) return a[c->cls];
  if (const auto* c = std::get_if<Comparative>(&q.kind)) {
    return a[c->first] - a[c->second];
  }
  return a[std::get<UnitProjection>(q.kind).unit];
}

// Backpropagates a one-hot seed at activation `readout` down to `cut`.
inline Tensor BackpropUnit(const Network& net,
                           const std::vector<Tensor>& acts, std::size_t cut,
                           std::size_t readout, std::size_t unit) {
  Tensor grad(net.activation_shape(readout));
  grad[unit] = 1.0;
  for (std::size_t k = readout; k > cut; --k) {
    grad = LayerBackward(net.layers()[k - 1], acts[k - 1], grad);
  }
  return grad;
}

}  // namespace detail

// Value of the quantity given the activation `z` at `cut`.
inline double EvaluateQuantityAt(const Network& net, std::size_t cut,
                                 const QuantityOfInterest& q, const Tensor& z) {
  ValidateQuantity(net, q);
  const std::size_t readout = detail::ReadoutLayer(net, q);
  if (readout < cut) {
    throw Error(ErrorKind::kInvalidArgument,
                "quantity " + QuantityToString(q) +
                    " is not downstream of cut " + std::to_string(cut));
  }
  return detail::ReadQuantity(q, net.ForwardRange(z, cut, readout));
}

inline double EvaluateQuantity(const Network& net, const QuantityOfInterest& q,
                               const Tensor& x) {
  return EvaluateQuantityAt(net, 0, q, x);
}

// Gradient of (quantity o g) with respect to z, evaluated at z = h(x).
inline Tensor SliceGradient(const Slice& slice, const QuantityOfInterest& q,
                            const Tensor& x) {
  const Network& net = slice.network();
  RequireShape(net.input_shape(), x.shape(), "slice gradient input");
  ValidateQuantity(net, q);
  const std::size_t readout = detail::ReadoutLayer(net, q);
  if (readout < slice.cut()) {
    throw Error(ErrorKind::kInvalidArgument,
                "quantity " + QuantityToString(q) +
                    " is not downstream of cut " +
                    std::to_string(slice.cut()));
  }
  const std::vector<Tensor> acts = net.ForwardRecorded(x);
  if (const auto* c = std::get_if<Comparative>(&q.kind)) {
    return detail::BackpropUnit(net, acts, slice.cut(), readout, c->first) -
           detail::BackpropUnit(net, acts, slice.cut(), readout, c->second);
  }
  const std::size_t unit =
      std::holds_alternative<ClassOutput>(q.kind)
          ? std::get<ClassOutput>(q.kind).cls
          : std::get<UnitProjection>(q.kind).unit;
  return detail::BackpropUnit(net, acts, slice.cut(), readout, unit);
}

inline std::size_t Argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

inline std::size_t PredictClass(const Network& net, const Tensor& x) {
  return Argmax(net.Forward(x).values());
}

}  // namespace distinf
