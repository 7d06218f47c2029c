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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>

#include "distinf/tensor.hpp"

namespace distinf {

// Fully connected: weights are out x in, input must be a flat vector.
struct Dense {
  Tensor weights;
  Tensor bias;

  std::size_t in_features() const { return weights.shape()[1]; }
  std::size_t out_features() const { return weights.shape()[0]; }
};

// Valid-padding 2-D convolution over C x H x W inputs with a square stride.
struct Conv2D {
  Tensor kernels;  // outC x inC x kH x kW
  Tensor bias;     // outC
  std::size_t stride = 1;

  std::size_t out_channels() const { return kernels.shape()[0]; }
  std::size_t in_channels() const { return kernels.shape()[1]; }
  std::size_t kernel_rows() const { return kernels.shape()[2]; }
  std::size_t kernel_cols() const { return kernels.shape()[3]; }
};

struct MaxPool2D {
  std::size_t window = 2;
  std::size_t stride = 2;
};

struct ReLU {};
struct Flatten {};
struct Softmax {};
// Smooth activation used by the axiom checks, where ReLU kinks would make
// exact-equality tests fragile. Not produced by the trainer.
struct Sigmoid {};

using Layer = std::variant<Dense, Conv2D, ReLU, MaxPool2D, Flatten, Softmax,
                           Sigmoid>;

inline std::string LayerName(const Layer& layer) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Dense>) return "dense";
        if constexpr (std::is_same_v<T, Conv2D>) return "conv2d";
        if constexpr (std::is_same_v<T, ReLU>) return "relu";
        if constexpr (std::is_same_v<T, MaxPool2D>) return "maxpool2d";
        if constexpr (std::is_same_v<T, Flatten>) return "flatten";
        if constexpr (std::is_same_v<T, Softmax>) return "softmax";
        if constexpr (std::is_same_v<T, Sigmoid>) return "sigmoid";
      },
      layer);
}

inline bool HasParameters(const Layer& layer) {
  return std::holds_alternative<Dense>(layer) ||
         std::holds_alternative<Conv2D>(layer);
}

namespace detail {

inline std::size_t WindowCount(std::size_t extent, std::size_t window,
                               std::size_t stride) {
  return (extent - window) / stride + 1;
}

inline void RequireRank3(const Shape& in, std::string_view layer) {
  if (in.size() != 3) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(layer) + " expects a CxHxW input, got " +
                    ShapeToString(in));
  }
}

}  // namespace detail

// Output shape of `layer` applied to `in`; throws ShapeMismatch when the
// layer cannot consume `in`.
inline Shape OutputShape(const Layer& layer, const Shape& in) {
  if (const auto* d = std::get_if<Dense>(&layer)) {
    if (d->weights.rank() != 2 || d->bias.shape() != Shape{d->out_features()}) {
      throw Error(ErrorKind::kShapeMismatch, "dense parameters inconsistent");
    }
    RequireShape(Shape{d->in_features()}, in, "dense input");
    return {d->out_features()};
  }
  if (const auto* c = std::get_if<Conv2D>(&layer)) {
    if (c->kernels.rank() != 4 || c->bias.shape() != Shape{c->out_channels()}) {
      throw Error(ErrorKind::kShapeMismatch, "conv2d parameters inconsistent");
    }
    if (c->stride == 0) {
      throw Error(ErrorKind::kInvalidArgument, "conv2d stride must be >= 1");
    }
    detail::RequireRank3(in, "conv2d");
    if (in[0] != c->in_channels() || in[1] < c->kernel_rows() ||
        in[2] < c->kernel_cols()) {
      throw Error(ErrorKind::kShapeMismatch,
                  "conv2d with kernels " + ShapeToString(c->kernels.shape()) +
                      " cannot consume " + ShapeToString(in));
    }
    return {c->out_channels(),
            detail::WindowCount(in[1], c->kernel_rows(), c->stride),
            detail::WindowCount(in[2], c->kernel_cols(), c->stride)};
  }
  if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
    if (p->stride == 0 || p->window == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "maxpool2d window and stride must be >= 1");
    }
    detail::RequireRank3(in, "maxpool2d");
    if (in[1] < p->window || in[2] < p->window) {
      throw Error(ErrorKind::kShapeMismatch,
                  "maxpool2d window larger than input " + ShapeToString(in));
    }
    return {in[0], detail::WindowCount(in[1], p->window, p->stride),
            detail::WindowCount(in[2], p->window, p->stride)};
  }
  if (std::holds_alternative<Flatten>(layer)) return {ShapeSize(in)};
  if (std::holds_alternative<Softmax>(layer)) {
    if (in.size() != 1) {
      throw Error(ErrorKind::kShapeMismatch,
                  "softmax expects a vector, got " + ShapeToString(in));
    }
    return in;
  }
  return in;  // ReLU, Sigmoid
}

namespace detail {

inline Tensor DenseForward(const Dense& d, const Tensor& x) {
  const std::size_t n_out = d.out_features();
  const std::size_t n_in = d.in_features();
  Tensor y({n_out});
  for (std::size_t o = 0; o < n_out; ++o) {
    double acc = d.bias[o];
    const double* row = d.weights.values().data() + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
  return y;
}

inline Tensor ConvForward(const Conv2D& c, const Tensor& x,
                          const Shape& out_shape) {
  Tensor y(out_shape);
  const std::size_t kr = c.kernel_rows(), kc = c.kernel_cols();
  const std::size_t ic_n = c.in_channels();
  for (std::size_t o = 0; o < out_shape[0]; ++o) {
    for (std::size_t r = 0; r < out_shape[1]; ++r) {
      for (std::size_t col = 0; col < out_shape[2]; ++col) {
        double acc = c.bias[o];
        for (std::size_t ic = 0; ic < ic_n; ++ic) {
          for (std::size_t a = 0; a < kr; ++a) {
            for (std::size_t b = 0; b < kc; ++b) {
              acc += c.kernels[((o * ic_n + ic) * kr + a) * kc + b] *
                     x.at(ic, r * c.stride + a, col * c.stride + b);
            }
          }
        }
        y.at(o, r, col) = acc;
      }
    }
  }
  return y;
}

// Flat input index of the maximum in a pooling window; the first index in
// row-major order wins ties.
inline std::size_t PoolArgmax(const MaxPool2D& p, const Tensor& x,
                              std::size_t ch, std::size_t r, std::size_t col) {
  const Shape& s = x.shape();
  std::size_t best = (ch * s[1] + r * p.stride) * s[2] + col * p.stride;
  for (std::size_t a = 0; a < p.window; ++a) {
    for (std::size_t b = 0; b < p.window; ++b) {
      const std::size_t idx =
          (ch * s[1] + r * p.stride + a) * s[2] + col * p.stride + b;
      if (x[idx] > x[best]) best = idx;
    }
  }
  return best;
}

inline Tensor SoftmaxForward(const Tensor& x) {
  const double m = *std::max_element(x.values().begin(), x.values().end());
  Tensor y(x.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - m);
    total += y[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] /= total;
  return y;
}

inline double SigmoidValue(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace detail

inline Tensor LayerForward(const Layer& layer, const Tensor& input) {
  RequireFinite(input, LayerName(layer) + " input");
  const Shape out_shape = OutputShape(layer, input.shape());
  Tensor out = std::visit(
      [&](const auto& l) -> Tensor {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Dense>) {
          return detail::DenseForward(l, input);
        } else if constexpr (std::is_same_v<T, Conv2D>) {
          return detail::ConvForward(l, input, out_shape);
        } else if constexpr (std::is_same_v<T, MaxPool2D>) {
          Tensor y(out_shape);
          for (std::size_t ch = 0; ch < out_shape[0]; ++ch)
            for (std::size_t r = 0; r < out_shape[1]; ++r)
              for (std::size_t col = 0; col < out_shape[2]; ++col)
                y.at(ch, r, col) =
                    input[detail::PoolArgmax(l, input, ch, r, col)];
          return y;
        } else if constexpr (std::is_same_v<T, ReLU>) {
          Tensor y(input.shape());
          for (std::size_t i = 0; i < input.size(); ++i)
            y[i] = input[i] > 0.0 ? input[i] : 0.0;
          return y;
        } else if constexpr (std::is_same_v<T, Sigmoid>) {
          Tensor y(input.shape());
          for (std::size_t i = 0; i < input.size(); ++i)
            y[i] = detail::SigmoidValue(input[i]);
          return y;
        } else if constexpr (std::is_same_v<T, Flatten>) {
          return input.Reshaped(out_shape);
        } else {
          return detail::SoftmaxForward(input);
        }
      },
      layer);
  RequireFinite(out, LayerName(layer) + " forward");
  return out;
}

// Gradients of <upstream, layer(input)> with respect to the layer input and,
// for Dense/Conv2D, the parameters.
struct LayerGradients {
  Tensor input;
  std::optional<Tensor> weights;
  std::optional<Tensor> bias;
};

inline LayerGradients LayerBackwardFull(const Layer& layer, const Tensor& input,
                                        const Tensor& upstream,
                                        bool want_params) {
  const Shape out_shape = OutputShape(layer, input.shape());
  RequireShape(out_shape, upstream.shape(), LayerName(layer) + " upstream");
  LayerGradients g{Tensor(input.shape()), std::nullopt, std::nullopt};
  Tensor& gin = g.input;

  if (const auto* d = std::get_if<Dense>(&layer)) {
    const std::size_t n_out = d->out_features(), n_in = d->in_features();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double u = upstream[o];
      const double* row = d->weights.values().data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) gin[i] += u * row[i];
    }
    if (want_params) {
      Tensor gw(d->weights.shape());
      for (std::size_t o = 0; o < n_out; ++o)
        for (std::size_t i = 0; i < n_in; ++i)
          gw[o * n_in + i] = upstream[o] * input[i];
      g.weights = std::move(gw);
      g.bias = upstream;
    }
  } else if (const auto* c = std::get_if<Conv2D>(&layer)) {
    const std::size_t kr = c->kernel_rows(), kc = c->kernel_cols();
    const std::size_t ic_n = c->in_channels();
    Tensor gw(c->kernels.shape());
    Tensor gb(c->bias.shape());
    for (std::size_t o = 0; o < out_shape[0]; ++o) {
      for (std::size_t r = 0; r < out_shape[1]; ++r) {
        for (std::size_t col = 0; col < out_shape[2]; ++col) {
          const double u = upstream.at(o, r, col);
          gb[o] += u;
          for (std::size_t ic = 0; ic < ic_n; ++ic) {
            for (std::size_t a = 0; a < kr; ++a) {
              for (std::size_t b = 0; b < kc; ++b) {
                const std::size_t k = ((o * ic_n + ic) * kr + a) * kc + b;
                const std::size_t rr = r * c->stride + a;
                const std::size_t cc = col * c->stride + b;
                gin.at(ic, rr, cc) += u * c->kernels[k];
                if (want_params) gw[k] += u * input.at(ic, rr, cc);
              }
            }
          }
        }
      }
    }
    if (want_params) {
      g.weights = std::move(gw);
      g.bias = std::move(gb);
    }
  } else if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
    for (std::size_t ch = 0; ch < out_shape[0]; ++ch)
      for (std::size_t r = 0; r < out_shape[1]; ++r)
        for (std::size_t col = 0; col < out_shape[2]; ++col)
          gin[detail::PoolArgmax(*p, input, ch, r, col)] +=
              upstream.at(ch, r, col);
  } else if (std::holds_alternative<ReLU>(layer)) {
    // Derivative at exactly 0 is 0.
    for (std::size_t i = 0; i < input.size(); ++i)
      gin[i] = input[i] > 0.0 ? upstream[i] : 0.0;
  } else if (std::holds_alternative<Sigmoid>(layer)) {
    for (std::size_t i = 0; i < input.size(); ++i) {
      const double s = detail::SigmoidValue(input[i]);
      gin[i] = upstream[i] * s * (1.0 - s);
    }
  } else if (std::holds_alternative<Flatten>(layer)) {
    gin = upstream.Reshaped(input.shape());
  } else {
    const Tensor s = detail::SoftmaxForward(input);
    double dot = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) dot += upstream[i] * s[i];
    for (std::size_t i = 0; i < s.size(); ++i)
      gin[i] = s[i] * (upstream[i] - dot);
  }
  RequireFinite(gin, LayerName(layer) + " backward");
  return g;
}

// Vector-Jacobian product of the layer at `input` with `upstream`.
inline Tensor LayerBackward(const Layer& layer, const Tensor& input,
                            const Tensor& upstream) {
  return LayerBackwardFull(layer, input, upstream, false).input;
}

}  // namespace distinf
