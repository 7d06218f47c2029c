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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "distinf/dataset.hpp"
#include "distinf/influence.hpp"
#include "distinf/network.hpp"
#include "distinf/text.hpp"

namespace distinf {

enum class MaskSource { kInfluence, kActivation };

inline std::string MaskSourceName(MaskSource s) {
  return s == MaskSource::kInfluence ? "influence" : "activation";
}

// 0-1 selection over the flat units of a slice. alpha/beta are the counts
// actually kept, which can be below the requested counts when too few units
// qualify. Activation masks store their whole budget in alpha.
struct ExpertMask {
  std::vector<std::uint8_t> bits;
  Shape z_shape;
  std::size_t alpha = 0;
  std::size_t beta = 0;
  std::size_t requested_alpha = 0;
  std::size_t requested_beta = 0;
  MaskSource source = MaskSource::kInfluence;

  std::size_t popcount() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
  }

  static ExpertMask AllOnes(const Shape& z_shape) {
    ExpertMask m;
    m.z_shape = z_shape;
    m.bits.assign(ShapeSize(z_shape), 1);
    m.alpha = m.requested_alpha = m.bits.size();
    return m;
  }
};

// g(h(x) * M): the model with unselected slice units zeroed.
inline Tensor SliceCompression(const Slice& slice, const ExpertMask& mask,
                               const Tensor& x) {
  if (mask.bits.size() != slice.unit_count()) {
    throw Error(ErrorKind::kShapeMismatch,
                "mask has " + std::to_string(mask.bits.size()) +
                    " bits, slice has " + std::to_string(slice.unit_count()) +
                    " units");
  }
  Tensor z = slice.H(x);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!mask.bits[i]) z[i] = 0.0;
  }
  return slice.G(z);
}

enum class BinaryLabel : std::uint8_t { kNeg, kPos };

// Pos iff the argmax (lowest index on ties) is class `cls`.
inline std::vector<BinaryLabel> BinarizePredictions(
    const std::vector<Tensor>& outputs, std::size_t cls) {
  std::vector<BinaryLabel> preds;
  preds.reserve(outputs.size());
  for (const Tensor& out : outputs) {
    if (cls >= out.size()) {
      throw Error(ErrorKind::kInvalidClassIndex,
                  "class " + std::to_string(cls) + " outside output of size " +
                      std::to_string(out.size()));
    }
    preds.push_back(Argmax(out.values()) == cls ? BinaryLabel::kPos
                                                : BinaryLabel::kNeg);
  }
  return preds;
}

struct BinaryMetrics {
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Degenerate conventions: precision is 1 with no positive predictions,
// recall is 0 with no positive labels, f1 is 0 when precision+recall is 0.
inline BinaryMetrics ComputeBinaryMetrics(
    const std::vector<BinaryLabel>& preds,
    const std::vector<BinaryLabel>& labels) {
  if (preds.empty() || preds.size() != labels.size()) {
    throw Error(ErrorKind::kEmptyBatch,
                "metrics need equal-length nonempty prediction and label lists");
  }
  BinaryMetrics m;
  for (std::size_t n = 0; n < preds.size(); ++n) {
    const bool p = preds[n] == BinaryLabel::kPos;
    const bool l = labels[n] == BinaryLabel::kPos;
    if (p && l) ++m.tp;
    else if (p) ++m.fp;
    else if (l) ++m.fn;
    else ++m.tn;
  }
  m.precision = m.tp + m.fp == 0
                    ? 1.0
                    : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  m.recall = m.tp + m.fn == 0
                 ? 0.0
                 : static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

// Keeps the `alpha` largest strictly positive and the `beta` most negative
// strictly negative units. Zero-influence units are never selected.
inline ExpertMask BuildMaskInfluence(const InfluenceVector& iv,
                                     std::size_t alpha, std::size_t beta) {
  ExpertMask m;
  m.z_shape = iv.values.shape();
  m.bits.assign(iv.values.size(), 0);
  m.requested_alpha = alpha;
  m.requested_beta = beta;
  m.source = MaskSource::kInfluence;
  for (std::size_t i : RankUnits(iv, SortOrder::kDescending)) {
    if (m.alpha == alpha || !(iv.values[i] > 0.0)) break;
    m.bits[i] = 1;
    ++m.alpha;
  }
  for (std::size_t i : RankUnits(iv, SortOrder::kAscending)) {
    if (m.beta == beta || !(iv.values[i] < 0.0)) break;
    m.bits[i] = 1;
    ++m.beta;
  }
  return m;
}

// Mean slice activation over the distribution.
inline Tensor MeanActivation(const Slice& slice,
                             const DistributionOfInterest& dist) {
  return Expectation([&](const Tensor& x) { return slice.H(x); }, dist,
                     slice.input_shape());
}

// Keeps the k units with the largest mean activation over `dist`.
inline ExpertMask BuildMaskActivation(const Slice& slice,
                                      const DistributionOfInterest& dist,
                                      std::size_t k) {
  const Tensor mean = MeanActivation(slice, dist);
  ExpertMask m;
  m.z_shape = mean.shape();
  m.bits.assign(mean.size(), 0);
  m.source = MaskSource::kActivation;
  m.requested_alpha = k;
  for (std::size_t i : RankUnits(mean.values(), SortOrder::kDescending)) {
    if (m.alpha == k) break;
    m.bits[i] = 1;
    ++m.alpha;
  }
  return m;
}

inline std::vector<BinaryLabel> BinaryLabels(const LabeledDataset& set,
                                             std::size_t cls) {
  std::vector<BinaryLabel> out;
  out.reserve(set.labels.size());
  for (std::size_t l : set.labels) {
    out.push_back(l == cls ? BinaryLabel::kPos : BinaryLabel::kNeg);
  }
  return out;
}

inline BinaryMetrics EvaluateMask(const Slice& slice, const ExpertMask& mask,
                                  std::size_t cls, const LabeledDataset& set) {
  std::vector<Tensor> outputs;
  outputs.reserve(set.instances.size());
  for (const Tensor& x : set.instances) {
    outputs.push_back(SliceCompression(slice, mask, x));
  }
  return ComputeBinaryMetrics(BinarizePredictions(outputs, cls),
                              BinaryLabels(set, cls));
}

inline BinaryMetrics EvaluateOriginal(const Network& net, std::size_t cls,
                                      const LabeledDataset& set) {
  std::vector<Tensor> outputs;
  outputs.reserve(set.instances.size());
  for (const Tensor& x : set.instances) outputs.push_back(net.Forward(x));
  return ComputeBinaryMetrics(BinarizePredictions(outputs, cls),
                              BinaryLabels(set, cls));
}

// 0 and ceil(p * units) for p in {1, 2, 5, 10, 25, 50, 100}%, deduplicated.
inline std::vector<std::size_t> DefaultSweepGrid(std::size_t units) {
  std::vector<std::size_t> grid{0};
  for (int pct : {1, 2, 5, 10, 25, 50, 100}) {
    const std::size_t v = (units * static_cast<std::size_t>(pct) + 99) / 100;
    if (grid.empty() || grid.back() != v) grid.push_back(v);
  }
  return grid;
}

struct SweepCell {
  std::size_t alpha = 0;
  std::size_t beta = 0;
  ExpertMask mask;
  BinaryMetrics metrics;
};

struct SweepResult {
  std::size_t cls = 0;
  InfluenceVector influence;
  BinaryMetrics original;
  double precision_floor = 0.0;
  std::vector<SweepCell> grid;  // ordered by (alpha, beta)
  std::optional<std::size_t> best;  // index into grid; empty when infeasible
};

// Extracts the class-`cls` expert: influence of ClassOutput(cls) over the
// uniform distribution of class-`cls` instances, then every (alpha, beta)
// compression evaluated on `eval_set`. The chosen cell maximizes recall with
// precision >= original precision - slack; ties go to higher precision, then
// smaller alpha+beta, then ascending (alpha, beta).
inline SweepResult ExpertSweep(const Slice& slice, std::size_t cls,
                               const LabeledDataset& eval_set,
                               std::vector<std::size_t> alpha_grid,
                               std::vector<std::size_t> beta_grid,
                               double precision_slack = 0.0,
                               bool post_softmax = true) {
  const Network& net = slice.network();
  ValidateQuantity(net, QuantityOfInterest::Class(cls));
  if (eval_set.instances.size() != eval_set.labels.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "evaluation set instances and labels differ in length");
  }
  if (alpha_grid.empty() || beta_grid.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "sweep grids must be nonempty");
  }
  std::vector<Tensor> positives;
  bool has_negative = false;
  for (std::size_t n = 0; n < eval_set.labels.size(); ++n) {
    if (eval_set.labels[n] == cls) positives.push_back(eval_set.instances[n]);
    else has_negative = true;
  }
  if (positives.empty() || !has_negative) {
    throw Error(ErrorKind::kInvalidArgument,
                "evaluation set needs both class " + std::to_string(cls) +
                    " and other instances");
  }
  std::sort(alpha_grid.begin(), alpha_grid.end());
  alpha_grid.erase(std::unique(alpha_grid.begin(), alpha_grid.end()),
                   alpha_grid.end());
  std::sort(beta_grid.begin(), beta_grid.end());
  beta_grid.erase(std::unique(beta_grid.begin(), beta_grid.end()),
                  beta_grid.end());

  QuantityOfInterest qoi = QuantityOfInterest::Class(cls);
  qoi.post_softmax = post_softmax;

  SweepResult result;
  result.cls = cls;
  result.influence =
      Influence(slice, qoi, Empirical::Uniform(std::move(positives)));
  result.original = EvaluateOriginal(net, cls, eval_set);
  result.precision_floor = result.original.precision - precision_slack;

  for (std::size_t a : alpha_grid) {
    for (std::size_t b : beta_grid) {
      SweepCell cell{a, b, BuildMaskInfluence(result.influence, a, b), {}};
      cell.metrics = EvaluateMask(slice, cell.mask, cls, eval_set);
      result.grid.push_back(std::move(cell));
    }
  }

  auto better = [](const SweepCell& c, const SweepCell& best) {
    if (c.metrics.recall != best.metrics.recall)
      return c.metrics.recall > best.metrics.recall;
    if (c.metrics.precision != best.metrics.precision)
      return c.metrics.precision > best.metrics.precision;
    if (c.alpha + c.beta != best.alpha + best.beta)
      return c.alpha + c.beta < best.alpha + best.beta;
    return false;  // grid order already ascending in (alpha, beta)
  };
  for (std::size_t n = 0; n < result.grid.size(); ++n) {
    if (result.grid[n].metrics.precision < result.precision_floor) continue;
    if (!result.best || better(result.grid[n], result.grid[*result.best])) {
      result.best = n;
    }
  }
  return result;
}

// `alpha,beta,precision,recall,f1`, one row per grid cell.
inline void WriteSweepCsv(const SweepResult& r, std::ostream& out) {
  out << "alpha,beta,precision,recall,f1\n";
  for (const SweepCell& c : r.grid) {
    out << c.alpha << ',' << c.beta << ',' << FormatDouble(c.metrics.precision)
        << ',' << FormatDouble(c.metrics.recall) << ','
        << FormatDouble(c.metrics.f1) << '\n';
  }
}

// Header line followed by one kept flat index per line.
inline void WriteMask(const ExpertMask& m, std::ostream& out) {
  std::string shape;
  for (std::size_t i = 0; i < m.z_shape.size(); ++i) {
    if (i) shape += 'x';
    shape += std::to_string(m.z_shape[i]);
  }
  out << "# z_shape=" << shape << ";alpha=" << m.alpha << ";beta=" << m.beta
      << ";source=" << MaskSourceName(m.source) << '\n';
  for (std::size_t i = 0; i < m.bits.size(); ++i) {
    if (m.bits[i]) out << i << '\n';
  }
}

}  // namespace distinf
