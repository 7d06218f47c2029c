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
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "distinf/dataset.hpp"
#include "distinf/network.hpp"
#include "distinf/random.hpp"
#include "distinf/text.hpp"

namespace distinf {

// conv3x3(4) relu conv3x3(8) relu flatten dense(hidden) relu dense(classes)
// softmax, zero-initialized. The slice after the hidden relu (cut 7) is the
// fully connected layer used for experts and internal dropoff.
inline Network ConvNet(const Shape& input_shape, std::size_t classes,
                       std::size_t hidden = 128) {
  if (input_shape.size() != 3) {
    throw Error(ErrorKind::kShapeMismatch, "conv net needs a CxHxW input");
  }
  const std::size_t c = input_shape[0];
  std::vector<Layer> layers = {
      Conv2D{Tensor({4, c, 3, 3}), Tensor({4}), 1},
      ReLU{},
      Conv2D{Tensor({8, 4, 3, 3}), Tensor({8}), 1},
      ReLU{},
      Flatten{}};
  Shape s = input_shape;
  for (const Layer& l : layers) s = OutputShape(l, s);
  layers.push_back(Dense{Tensor({hidden, s[0]}), Tensor({hidden})});
  layers.push_back(ReLU{});
  layers.push_back(Dense{Tensor({classes, hidden}), Tensor({classes})});
  layers.push_back(Softmax{});
  return Network(input_shape, std::move(layers));
}

inline constexpr std::size_t kConvNetFcCut = 7;

// input -> dense(hidden) relu -> dense(classes) softmax.
inline Network Mlp(std::size_t inputs, std::size_t hidden, std::size_t classes) {
  return Network({inputs}, {Dense{Tensor({hidden, inputs}), Tensor({hidden})},
                            ReLU{},
                            Dense{Tensor({classes, hidden}), Tensor({classes})},
                            Softmax{}});
}

// He-uniform weights, zero biases.
inline Network InitializeWeights(const Network& net, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Layer> layers = net.layers();
  for (Layer& layer : layers) {
    Tensor* w = nullptr;
    std::size_t fan_in = 0;
    if (auto* d = std::get_if<Dense>(&layer)) {
      w = &d->weights;
      fan_in = d->in_features();
    } else if (auto* c = std::get_if<Conv2D>(&layer)) {
      w = &c->kernels;
      fan_in = c->in_channels() * c->kernel_rows() * c->kernel_cols();
    } else {
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : w->values()) v = rng.Uniform(-bound, bound);
  }
  return Network(net.input_shape(), std::move(layers));
}

struct TrainOptions {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch = 16;
  std::uint64_t seed = 1;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean cross-entropy over the epoch's samples
  double accuracy = 0.0;  // training accuracy after the epoch
};

struct TrainResult {
  Network network;
  double accuracy = 0.0;
  std::vector<EpochStats> history;
};

inline double Accuracy(const Network& net, const LabeledDataset& ds) {
  if (ds.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t n = 0; n < ds.size(); ++n) {
    if (PredictClass(net, ds.instances[n]) == ds.labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace detail {

// Cross-entropy of softmax(logits) against `label`, via log-sum-exp.
inline double CrossEntropy(const Tensor& logits, std::size_t label) {
  const double m = *std::max_element(logits.values().begin(), logits.values().end());
  double total = 0.0;
  for (double v : logits.values()) total += std::exp(v - m);
  return m + std::log(total) - logits[label];
}

}  // namespace detail

// Plain minibatch SGD on softmax cross-entropy. Each epoch shuffles with the
// seeded generator; gradients accumulate in sample order and are averaged
// over the batch. Throws NonFiniteLoss if training diverges.
inline TrainResult TrainSgd(const Network& initial, const LabeledDataset& ds,
                            const TrainOptions& opt) {
  if (ds.empty()) throw Error(ErrorKind::kEmptyBatch, "training set is empty");
  if (!(opt.learning_rate >= 0.0) || opt.batch == 0) {
    throw Error(ErrorKind::kInvalidArgument, "need lr >= 0 and batch >= 1");
  }
  for (std::size_t label : ds.labels) {
    if (label >= initial.output_dim()) {
      throw Error(ErrorKind::kInvalidClassIndex,
                  "label " + std::to_string(label) + " outside model outputs");
    }
  }
  const std::size_t n_layers = initial.layer_count();
  std::vector<Layer> params = initial.layers();
  Rng rng(opt.seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{initial, 0.0, {}};
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    rng.Shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch) {
      const std::size_t end = std::min(order.size(), start + opt.batch);
      const Network net(initial.input_shape(), params);
      std::vector<std::vector<Tensor>> grads(n_layers);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t n = order[b];
        std::vector<Tensor> acts;
        double loss = std::numeric_limits<double>::infinity();
        try {
          acts = net.ForwardRecorded(ds.instances[n]);
          loss = detail::CrossEntropy(acts[n_layers - 1], ds.labels[n]);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kNonFinite) throw;
        }
        if (!std::isfinite(loss)) {
          throw Error(ErrorKind::kNonFiniteLoss,
                      "epoch " + std::to_string(epoch) + " sample " +
                          std::to_string(n) + "; last finite epoch loss " +
                          (result.history.empty()
                               ? std::string("none")
                               : FormatDouble(result.history.back().loss)));
        }
        loss_sum += loss;
        Tensor up = acts[n_layers];  // d loss / d logits = softmax - onehot
        up[ds.labels[n]] -= 1.0;
        for (std::size_t k = n_layers - 1; k > 0; --k) {
          const std::size_t li = k - 1;
          LayerGradients g = LayerBackwardFull(params[li], acts[li], up,
                                               HasParameters(params[li]));
          if (g.weights) {
            if (grads[li].empty()) {
              grads[li] = {std::move(*g.weights), std::move(*g.bias)};
            } else {
              Axpy(1.0, *g.weights, grads[li][0]);
              Axpy(1.0, *g.bias, grads[li][1]);
            }
          }
          up = std::move(g.input);
        }
      }
      const double step = opt.learning_rate / static_cast<double>(end - start);
      for (std::size_t li = 0; li < n_layers; ++li) {
        if (grads[li].empty() || step == 0.0) continue;
        Tensor* w = nullptr;
        Tensor* bias = nullptr;
        if (auto* d = std::get_if<Dense>(&params[li])) {
          w = &d->weights;
          bias = &d->bias;
        } else if (auto* c = std::get_if<Conv2D>(&params[li])) {
          w = &c->kernels;
          bias = &c->bias;
        }
        Axpy(-step, grads[li][0], *w);
        Axpy(-step, grads[li][1], *bias);
      }
    }
    result.network = Network(initial.input_shape(), params);
    result.accuracy = Accuracy(result.network, ds);
    result.history.push_back(
        {epoch, loss_sum / static_cast<double>(ds.size()), result.accuracy});
  }
  if (opt.epochs == 0) result.accuracy = Accuracy(result.network, ds);
  return result;
}

// `epoch,loss,accuracy` rows.
inline void WriteTrainReport(const TrainResult& r, std::ostream& out) {
  out << "epoch,loss,accuracy\n";
  for (const EpochStats& e : r.history) {
    out << e.epoch << ',' << FormatDouble(e.loss) << ','
        << FormatDouble(e.accuracy) << '\n';
  }
}

}  // namespace distinf
