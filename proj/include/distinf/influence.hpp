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
#include <concepts>
#include <cstddef>
#include <memory>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "distinf/network.hpp"
#include "distinf/tensor.hpp"
#include "distinf/text.hpp"

namespace distinf {

class DistributionOfInterest;

struct PointMass {
  Tensor x;
};

// Finite weighted support. Weights are nonnegative and sum to 1.
struct Empirical {
  std::vector<Tensor> instances;
  std::vector<double> weights;

  static Empirical Uniform(std::vector<Tensor> instances) {
    const std::size_t n = instances.size();
    return {std::move(instances),
            std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0)};
  }
};

// Uniform over the `steps` points baseline + (k/steps)(target - baseline),
// k = 1..steps. The baseline itself is excluded and the target included.
struct LinearPath {
  Tensor baseline;
  Tensor target;
  std::size_t steps = 1;
};

struct MixtureComponent {
  double weight = 0.0;
  std::shared_ptr<const DistributionOfInterest> dist;
};

struct Mixture {
  std::vector<MixtureComponent> components;
};

class DistributionOfInterest {
 public:
  using Variant = std::variant<PointMass, Empirical, LinearPath, Mixture>;

  DistributionOfInterest(PointMass d) : v_(std::move(d)) {}
  DistributionOfInterest(Empirical d) : v_(std::move(d)) {}
  DistributionOfInterest(LinearPath d) : v_(std::move(d)) {}
  DistributionOfInterest(Mixture d) : v_(std::move(d)) {}

  const Variant& variant() const { return v_; }

  static DistributionOfInterest Mix(
      std::vector<std::pair<double, DistributionOfInterest>> parts) {
    Mixture m;
    for (auto& [w, d] : parts) {
      m.components.push_back(
          {w, std::make_shared<const DistributionOfInterest>(std::move(d))});
    }
    return DistributionOfInterest(std::move(m));
  }

 private:
  Variant v_;
};

namespace detail {

inline constexpr double kWeightSumTolerance = 1e-12;

inline void CheckWeights(const std::vector<double>& weights,
                         std::string_view what) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorKind::kInvalidArgument,
                  std::string(what) + " weights must be finite and >= 0");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(what) + " weights sum to " + FormatDouble(total) +
                    ", not 1");
  }
}

}  // namespace detail

// Any callable mapping an input tensor to a tensor of fixed shape.
template <class F>
concept TensorField = requires(const F& f, const Tensor& x) {
  { f(x) } -> std::convertible_to<Tensor>;
};

// Expectation of `field` over the finite support of `dist`. Point masses
// return field(x) untouched; empirical supports accumulate in instance order;
// linear paths sum then divide by the step count; mixtures combine component
// expectations in component order.
template <TensorField F>
Tensor Expectation(const F& field, const DistributionOfInterest& dist,
                   const Shape& input_shape) {
  return std::visit(
      [&](const auto& d) -> Tensor {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          RequireShape(input_shape, d.x.shape(), "point mass");
          return field(d.x);
        } else if constexpr (std::is_same_v<T, Empirical>) {
          if (d.instances.empty()) {
            throw Error(ErrorKind::kEmptyDistribution,
                        "empirical distribution has no instances");
          }
          if (d.weights.size() != d.instances.size()) {
            throw Error(ErrorKind::kInvalidArgument,
                        "empirical weights and instances differ in length");
          }
          detail::CheckWeights(d.weights, "empirical");
          Tensor acc;
          for (std::size_t n = 0; n < d.instances.size(); ++n) {
            RequireShape(input_shape, d.instances[n].shape(),
                         "empirical instance");
            Tensor v = field(d.instances[n]);
            if (n == 0) acc = Tensor(v.shape());
            Axpy(d.weights[n], v, acc);
          }
          return acc;
        } else if constexpr (std::is_same_v<T, LinearPath>) {
          RequireShape(input_shape, d.baseline.shape(), "path baseline");
          RequireShape(input_shape, d.target.shape(), "path target");
          if (d.steps == 0) {
            throw Error(ErrorKind::kInvalidArgument,
                        "linear path needs at least one step");
          }
          const Tensor delta = d.target - d.baseline;
          const double m = static_cast<double>(d.steps);
          Tensor acc;
          for (std::size_t k = 1; k <= d.steps; ++k) {
            Tensor point = d.baseline;
            Axpy(static_cast<double>(k) / m, delta, point);
            Tensor v = field(point);
            if (k == 1) acc = Tensor(v.shape());
            Axpy(1.0, v, acc);
          }
          return (1.0 / m) * acc;
        } else {
          if (d.components.empty()) {
            throw Error(ErrorKind::kEmptyDistribution,
                        "mixture has no components");
          }
          std::vector<double> weights;
          for (const auto& c : d.components) weights.push_back(c.weight);
          detail::CheckWeights(weights, "mixture");
          Tensor acc;
          for (std::size_t n = 0; n < d.components.size(); ++n) {
            Tensor v = Expectation(field, *d.components[n].dist, input_shape);
            if (n == 0) acc = Tensor(v.shape());
            Axpy(d.components[n].weight, v, acc);
          }
          return acc;
        }
      },
      dist.variant());
}

enum class Granularity { kNeuron, kChannel };

struct InfluenceVector {
  Tensor values;
  std::size_t slice_cut = 0;
  QuantityOfInterest qoi;
  Granularity granularity = Granularity::kNeuron;
};

// Distributional influence of every unit at the slice: the expected gradient
// of (qoi o g) at h(x) for x drawn from `dist`.
inline InfluenceVector Influence(const Slice& slice,
                                 const QuantityOfInterest& qoi,
                                 const DistributionOfInterest& dist) {
  ValidateQuantity(slice.network(), qoi);
  Tensor values = Expectation(
      [&](const Tensor& x) { return SliceGradient(slice, qoi, x); }, dist,
      slice.input_shape());
  return {std::move(values), slice.cut(), qoi, Granularity::kNeuron};
}

// (x - baseline) times the mean input gradient along the straight path.
inline Tensor IntegratedGradients(const Network& net,
                                  const QuantityOfInterest& qoi,
                                  const Tensor& baseline, const Tensor& x,
                                  std::size_t steps) {
  RequireShape(net.input_shape(), baseline.shape(), "baseline");
  RequireShape(net.input_shape(), x.shape(), "input");
  const InfluenceVector iv =
      Influence(Slice(net, 0), qoi, LinearPath{baseline, x, steps});
  return Hadamard(x - baseline, iv.values);
}

enum class SortOrder { kDescending, kAscending };

// Flat indices ordered by value; equal values keep ascending index order.
inline std::vector<std::size_t> RankUnits(std::span<const double> values,
                                          SortOrder order) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return order == SortOrder::kDescending ? values[a] > values[b]
                                           : values[a] < values[b];
  });
  return idx;
}

inline std::vector<std::size_t> RankUnits(const InfluenceVector& iv,
                                          SortOrder order) {
  return RankUnits(iv.values.values(), order);
}

// Spatial mean per channel of a C x H x W neuron-level influence.
inline InfluenceVector ChannelAggregate(const InfluenceVector& iv) {
  if (iv.granularity != Granularity::kNeuron || iv.values.rank() != 3) {
    throw Error(ErrorKind::kNotConvActivation,
                "channel aggregation needs neuron influence over CxHxW, got " +
                    ShapeToString(iv.values.shape()));
  }
  const Shape& s = iv.values.shape();
  const std::size_t plane = s[1] * s[2];
  Tensor out({s[0]});
  for (std::size_t c = 0; c < s[0]; ++c) {
    double acc = 0.0;
    for (std::size_t p = 0; p < plane; ++p) acc += iv.values[c * plane + p];
    out[c] = acc / static_cast<double>(plane);
  }
  return {std::move(out), iv.slice_cut, iv.qoi, Granularity::kChannel};
}

// CSV with header `flat_index,value`, one row per unit in index order.
inline void WriteInfluenceCsv(const InfluenceVector& iv, std::ostream& out) {
  out << "flat_index,value\n";
  for (std::size_t i = 0; i < iv.values.size(); ++i) {
    out << i << ',' << FormatDouble(iv.values[i]) << '\n';
  }
}

}  // namespace distinf
