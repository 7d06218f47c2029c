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
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "distinf/influence.hpp"
#include "distinf/network.hpp"
#include "distinf/random.hpp"
#include "distinf/text.hpp"

namespace distinf {

enum class DropoffMode { kInput, kInternal };
enum class RankingKind { kIndividual, kMean, kRandom };

inline std::string DropoffModeName(DropoffMode m) {
  return m == DropoffMode::kInput ? "input" : "internal";
}
inline std::string RankingName(RankingKind r) {
  switch (r) {
    case RankingKind::kIndividual: return "individual";
    case RankingKind::kMean: return "mean";
    case RankingKind::kRandom: return "random";
  }
  return "";
}

struct DropoffCurve {
  std::vector<double> fractions;
  std::vector<double> values;
  DropoffMode mode = DropoffMode::kInput;
  RankingKind ranking = RankingKind::kIndividual;
  std::size_t cut = 0;
};

// 0, 1/n, ..., 1.
inline std::vector<double> UniformFractions(std::size_t n = 100) {
  std::vector<double> f(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    f[k] = static_cast<double>(k) / static_cast<double>(n);
  }
  return f;
}

namespace detail {

inline void CheckFractions(const std::vector<double>& f) {
  if (f.size() < 2 || f.front() != 0.0 || f.back() != 1.0) {
    throw Error(ErrorKind::kInvalidArgument,
                "fractions must start at 0 and end at 1");
  }
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (!(f[k] > f[k - 1])) {
      throw Error(ErrorKind::kInvalidArgument,
                  "fractions must be strictly increasing");
    }
  }
}

inline void CheckMode(const Slice& slice, DropoffMode mode) {
  if (mode == DropoffMode::kInput && slice.cut() != 0) {
    throw Error(ErrorKind::kInvalidArgument, "input dropoff needs cut 0");
  }
  if (mode == DropoffMode::kInternal && slice.cut() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "internal dropoff needs cut > 0");
  }
}

}  // namespace detail

struct DropoffOptions {
  std::vector<double> fractions = UniformFractions();
  bool post_softmax = true;
};

// Dropoff for explicit per-instance removal orders. At each fraction the
// first ceil(fraction * U) units of the instance's order are zeroed at the
// slice and the quantity at the instance's originally predicted class is
// read. Means over instances are mapped affinely so the fraction-0 mean is 1
// and the fraction-1 mean is 0.
inline DropoffCurve DropoffFromOrders(
    const Slice& slice, DropoffMode mode, RankingKind ranking,
    const std::vector<Tensor>& instances,
    const std::vector<std::vector<std::size_t>>& orders,
    const DropoffOptions& options) {
  if (instances.empty()) {
    throw Error(ErrorKind::kEmptyInstanceSet, "dropoff needs instances");
  }
  detail::CheckMode(slice, mode);
  detail::CheckFractions(options.fractions);
  if (orders.size() != instances.size()) {
    throw Error(ErrorKind::kInvalidArgument, "need one removal order per instance");
  }
  const Network& net = slice.network();
  const std::size_t units = slice.unit_count();
  std::vector<double> sums(options.fractions.size(), 0.0);

  for (std::size_t n = 0; n < instances.size(); ++n) {
    const std::vector<std::size_t>& order = orders[n];
    if (order.size() != units) {
      throw Error(ErrorKind::kInvalidArgument,
                  "removal order must rank every unit");
    }
    QuantityOfInterest qoi =
        QuantityOfInterest::Class(PredictClass(net, instances[n]));
    qoi.post_softmax = options.post_softmax;
    Tensor z = slice.H(instances[n]);
    std::size_t removed = 0;
    for (std::size_t k = 0; k < options.fractions.size(); ++k) {
      const auto target = static_cast<std::size_t>(
          std::ceil(options.fractions[k] * static_cast<double>(units)));
      for (; removed < std::min(target, units); ++removed) {
        z[order[removed]] = 0.0;
      }
      sums[k] += EvaluateQuantityAt(net, slice.cut(), qoi, z);
    }
  }

  DropoffCurve curve{options.fractions, {}, mode, ranking, slice.cut()};
  const double count = static_cast<double>(instances.size());
  const double top = sums.front() / count;
  const double floor = sums.back() / count;
  if (top == floor) {
    throw Error(ErrorKind::kDegenerateNormalization,
                "mean output is unchanged by removing every unit");
  }
  for (double s : sums) curve.values.push_back((s / count - floor) / (top - floor));
  return curve;
}

// Removal orders by descending influence of the predicted-class quantity:
// each instance's own point-mass influence (Individual) or the uniform mean
// over all instances' predicted-class influences (Mean).
inline std::vector<std::vector<std::size_t>> InfluenceOrders(
    const Slice& slice, RankingKind ranking, const std::vector<Tensor>& instances,
    bool post_softmax = true) {
  std::vector<Tensor> per_instance;
  per_instance.reserve(instances.size());
  for (const Tensor& x : instances) {
    QuantityOfInterest qoi =
        QuantityOfInterest::Class(PredictClass(slice.network(), x));
    qoi.post_softmax = post_softmax;
    per_instance.push_back(Influence(slice, qoi, PointMass{x}).values);
  }
  std::vector<std::vector<std::size_t>> orders;
  if (ranking == RankingKind::kIndividual) {
    for (const Tensor& v : per_instance) {
      orders.push_back(RankUnits(v.values(), SortOrder::kDescending));
    }
    return orders;
  }
  if (ranking != RankingKind::kMean) {
    throw Error(ErrorKind::kInvalidArgument,
                "influence orders are individual or mean");
  }
  // Mean influence over the uniform empirical distribution, accumulated in
  // instance order.
  Tensor mean(per_instance.front().shape());
  const double w = 1.0 / static_cast<double>(per_instance.size());
  for (const Tensor& v : per_instance) Axpy(w, v, mean);
  orders.assign(instances.size(),
                RankUnits(mean.values(), SortOrder::kDescending));
  return orders;
}

inline std::vector<std::vector<std::size_t>> RandomOrders(std::size_t units,
                                                          std::size_t count,
                                                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> base(units);
  std::iota(base.begin(), base.end(), std::size_t{0});
  std::vector<std::vector<std::size_t>> orders;
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<std::size_t> order = base;
    rng.Shuffle(order);
    orders.push_back(std::move(order));
  }
  return orders;
}

inline DropoffCurve ComputeDropoffCurve(const Slice& slice, DropoffMode mode,
                                        RankingKind ranking,
                                        const std::vector<Tensor>& instances,
                                        const DropoffOptions& options = {},
                                        std::uint64_t random_seed = 0) {
  if (instances.empty()) {
    throw Error(ErrorKind::kEmptyInstanceSet, "dropoff needs instances");
  }
  detail::CheckMode(slice, mode);
  const auto orders =
      ranking == RankingKind::kRandom
          ? RandomOrders(slice.unit_count(), instances.size(), random_seed)
          : InfluenceOrders(slice, ranking, instances, options.post_softmax);
  return DropoffFromOrders(slice, mode, ranking, instances, orders, options);
}

// Trapezoidal area under the curve.
inline double CurveArea(const DropoffCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.fractions.size(); ++k) {
    area += 0.5 * (curve.fractions[k] - curve.fractions[k - 1]) *
            (curve.values[k] + curve.values[k - 1]);
  }
  return area;
}

inline void WriteCurveCsv(const DropoffCurve& c, std::ostream& out) {
  out << "# mode=" << DropoffModeName(c.mode)
      << ";ranking=" << RankingName(c.ranking) << ";cut=" << c.cut << '\n';
  out << "fraction,value\n";
  for (std::size_t k = 0; k < c.fractions.size(); ++k) {
    out << FormatDouble(c.fractions[k]) << ',' << FormatDouble(c.values[k])
        << '\n';
  }
}

// Whitespace-separated columns for gnuplot: the fraction followed by one
// column per curve. All curves must share the fraction grid.
inline void WriteCurvesGnuplot(const std::vector<DropoffCurve>& curves,
                               std::ostream& out) {
  if (curves.empty()) return;
  out << "# fraction";
  for (const DropoffCurve& c : curves) {
    out << ' ' << DropoffModeName(c.mode) << '_' << RankingName(c.ranking);
    if (c.fractions != curves.front().fractions) {
      throw Error(ErrorKind::kInvalidArgument,
                  "curves must share the fraction grid");
    }
  }
  out << '\n';
  for (std::size_t k = 0; k < curves.front().fractions.size(); ++k) {
    out << FormatDouble(curves.front().fractions[k]);
    for (const DropoffCurve& c : curves) out << ' ' << FormatDouble(c.values[k]);
    out << '\n';
  }
}

}  // namespace distinf
