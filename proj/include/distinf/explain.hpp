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
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "distinf/influence.hpp"
#include "distinf/network.hpp"

namespace distinf {

// How per-channel pixel influence becomes a scaling weight.
enum class ChannelScaling {
  kSummed,      // one spatial map from the positive parts summed over channels
  kPerChannel,  // each channel scaled by its own positive influence
};

// Input region (inclusive bounds) that can affect one unit.
struct ReceptiveBox {
  std::size_t row_begin = 0, row_end = 0;
  std::size_t col_begin = 0, col_end = 0;

  bool Contains(std::size_t r, std::size_t c) const {
    return r >= row_begin && r <= row_end && c >= col_begin && c <= col_end;
  }
  friend bool operator==(const ReceptiveBox&, const ReceptiveBox&) = default;
};

// Composes the window arithmetic of every layer below `cut`. Only conv,
// pooling and elementwise layers are allowed there.
inline ReceptiveBox ReceptiveField(const Network& net, std::size_t cut,
                                   std::size_t unit) {
  if (cut > net.layer_count()) {
    throw Error(ErrorKind::kInvalidArgument, "cut beyond network");
  }
  const Shape& z = net.activation_shape(cut);
  if (z.size() != 3) {
    throw Error(ErrorKind::kNonSpatialPrefix,
                "activation at cut " + std::to_string(cut) + " is not CxHxW");
  }
  if (unit >= ShapeSize(z)) {
    throw Error(ErrorKind::kInvalidUnit, "unit " + std::to_string(unit) +
                                             " outside " + ShapeToString(z));
  }
  const std::size_t pos = unit % (z[1] * z[2]);
  ReceptiveBox box{pos / z[2], pos / z[2], pos % z[2], pos % z[2]};
  for (std::size_t k = cut; k > 0; --k) {
    const Layer& layer = net.layers()[k - 1];
    std::size_t window_r = 1, window_c = 1, stride = 1;
    if (const auto* c = std::get_if<Conv2D>(&layer)) {
      window_r = c->kernel_rows();
      window_c = c->kernel_cols();
      stride = c->stride;
    } else if (const auto* p = std::get_if<MaxPool2D>(&layer)) {
      window_r = window_c = p->window;
      stride = p->stride;
    } else if (!std::holds_alternative<ReLU>(layer) &&
               !std::holds_alternative<Sigmoid>(layer)) {
      throw Error(ErrorKind::kNonSpatialPrefix,
                  LayerName(layer) + " below cut " + std::to_string(cut));
    }
    box = {box.row_begin * stride, box.row_end * stride + window_r - 1,
           box.col_begin * stride, box.col_end * stride + window_c - 1};
  }
  return box;
}

// Scales `instance` by the positive input influence on one unit at `cut`,
// normalized so the most influential pixel keeps its full value.
inline Tensor UnitInterpretation(const Network& net, std::size_t cut,
                                 std::size_t unit, const Tensor& instance,
                                 ChannelScaling scaling = ChannelScaling::kSummed) {
  const QuantityOfInterest qoi = QuantityOfInterest::Unit(cut, unit);
  ValidateQuantity(net, qoi);
  const Tensor infl = Influence(Slice(net, 0), qoi, PointMass{instance}).values;

  Tensor weights(instance.shape());
  if (scaling == ChannelScaling::kSummed && instance.rank() == 3) {
    const std::size_t channels = instance.shape()[0];
    const std::size_t plane = instance.size() / channels;
    for (std::size_t p = 0; p < plane; ++p) {
      double w = 0.0;
      for (std::size_t c = 0; c < channels; ++c) {
        w += std::max(0.0, infl[c * plane + p]);
      }
      for (std::size_t c = 0; c < channels; ++c) weights[c * plane + p] = w;
    }
  } else {
    for (std::size_t i = 0; i < infl.size(); ++i) {
      weights[i] = std::max(0.0, infl[i]);
    }
  }
  const double top =
      *std::max_element(weights.values().begin(), weights.values().end());
  Tensor out(instance.shape());
  if (top <= 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = instance[i] * (weights[i] / top);
  }
  return out;
}

struct RankedUnit {
  std::size_t index = 0;   // flat neuron index, or channel index
  double influence = 0.0;
  std::size_t neuron = 0;  // flat neuron that was interpreted
};

struct Explanation {
  Tensor instance;
  InfluenceVector influence;  // at the requested granularity
  std::vector<RankedUnit> top_units;
  std::vector<Tensor> interpretations;
  QuantityOfInterest qoi;
  std::size_t cut = 0;
};

// Top-k units at `cut` for `qoi` under a point mass at `instance`, each with
// its pixel-scaling interpretation. At channel granularity the channel's
// most influential neuron is interpreted.
inline Explanation ExplainWith(const Network& net, std::size_t cut,
                               const Tensor& instance,
                               const QuantityOfInterest& qoi, std::size_t k,
                               Granularity granularity,
                               ChannelScaling scaling = ChannelScaling::kSummed) {
  if (k == 0) throw Error(ErrorKind::kInvalidArgument, "k must be >= 1");
  const Slice slice(net, cut);
  const InfluenceVector neurons = Influence(slice, qoi, PointMass{instance});
  Explanation e{instance, neurons, {}, {}, qoi, cut};
  if (granularity == Granularity::kChannel) {
    e.influence = ChannelAggregate(neurons);
  }
  const std::vector<std::size_t> order =
      RankUnits(e.influence, SortOrder::kDescending);
  const std::size_t take = std::min(k, order.size());
  for (std::size_t n = 0; n < take; ++n) {
    RankedUnit u{order[n], e.influence.values[order[n]], order[n]};
    if (granularity == Granularity::kChannel) {
      const std::size_t plane = neurons.values.size() / e.influence.values.size();
      const auto first = neurons.values.values().begin() +
                         static_cast<std::ptrdiff_t>(u.index * plane);
      u.neuron = u.index * plane +
                 static_cast<std::size_t>(
                     std::max_element(first, first + static_cast<std::ptrdiff_t>(plane)) -
                     first);
    }
    e.top_units.push_back(u);
    e.interpretations.push_back(
        UnitInterpretation(net, cut, u.neuron, instance, scaling));
  }
  return e;
}

inline Explanation FocusedExplanation(
    const Network& net, std::size_t cut, const Tensor& instance,
    std::size_t label, std::size_t k, Granularity granularity,
    ChannelScaling scaling = ChannelScaling::kSummed) {
  return ExplainWith(net, cut, instance, QuantityOfInterest::Class(label), k,
                     granularity, scaling);
}

// Why `first` rather than `second`: the quantity f|first - f|second.
inline Explanation ComparativeExplanation(
    const Network& net, std::size_t cut, const Tensor& instance,
    std::size_t first, std::size_t second, std::size_t k,
    Granularity granularity, ChannelScaling scaling = ChannelScaling::kSummed) {
  return ExplainWith(net, cut, instance,
                     QuantityOfInterest::Compare(first, second), k, granularity,
                     scaling);
}

}  // namespace distinf
