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

// Flag grammars shared by the command-line tool:
//   quantity      class:<i> | comparative:<i>,<j> | unit:<layer>,<flat>  [@logits]
//   distribution  point:<idx> | class:<label> | path:<baseline>,<idx>,<steps>
// A path baseline is a constant fill value for every input coordinate.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "distinf/dataset.hpp"
#include "distinf/error.hpp"
#include "distinf/influence.hpp"
#include "distinf/network.hpp"

namespace distinf {

namespace detail {

inline std::vector<std::string_view> SplitFields(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::size_t ParseIndex(std::string_view s, std::string_view what) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "bad " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

inline double ParseNumber(std::string_view s, std::string_view what) {
  const std::string text(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::kInvalidArgument,
                "bad " + std::string(what) + " '" + text + "'");
  }
  return v;
}

// Splits "<kind>:<args>" and checks the argument count.
inline std::vector<std::string_view> SpecArgs(std::string_view body,
                                              std::string_view kind,
                                              std::size_t count) {
  auto args = SplitFields(body.substr(kind.size() + 1), ',');
  if (args.size() != count) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(kind) + " takes " + std::to_string(count) +
                    " argument(s)");
  }
  return args;
}

inline bool HasKind(std::string_view s, std::string_view kind) {
  return s.size() > kind.size() && s.substr(0, kind.size()) == kind &&
         s[kind.size()] == ':';
}

}  // namespace detail

inline QuantityOfInterest ParseQuantity(std::string_view text) {
  std::string_view body = text;
  bool post_softmax = true;
  constexpr std::string_view kLogits = "@logits";
  if (body.size() >= kLogits.size() &&
      body.substr(body.size() - kLogits.size()) == kLogits) {
    body.remove_suffix(kLogits.size());
    post_softmax = false;
  }
  QuantityOfInterest q = QuantityOfInterest::Class(0);
  if (detail::HasKind(body, "class")) {
    const auto a = detail::SpecArgs(body, "class", 1);
    q = QuantityOfInterest::Class(detail::ParseIndex(a[0], "class index"));
  } else if (detail::HasKind(body, "comparative")) {
    const auto a = detail::SpecArgs(body, "comparative", 2);
    q = QuantityOfInterest::Compare(detail::ParseIndex(a[0], "class index"),
                                    detail::ParseIndex(a[1], "class index"));
  } else if (detail::HasKind(body, "unit")) {
    const auto a = detail::SpecArgs(body, "unit", 2);
    q = QuantityOfInterest::Unit(detail::ParseIndex(a[0], "layer"),
                                 detail::ParseIndex(a[1], "unit"));
  } else {
    throw Error(ErrorKind::kInvalidArgument,
                "unknown quantity '" + std::string(text) + "'");
  }
  q.post_softmax = post_softmax;
  return q;
}

struct DistributionSpec {
  enum class Kind { kPoint, kClass, kPath } kind = Kind::kPoint;
  std::size_t index = 0;  // instance index, or class label for kClass
  double baseline = 0.0;
  std::size_t steps = 0;
};

inline DistributionSpec ParseDistribution(std::string_view text) {
  DistributionSpec d;
  if (detail::HasKind(text, "point")) {
    d.index = detail::ParseIndex(detail::SpecArgs(text, "point", 1)[0], "index");
  } else if (detail::HasKind(text, "class")) {
    d.kind = DistributionSpec::Kind::kClass;
    d.index = detail::ParseIndex(detail::SpecArgs(text, "class", 1)[0], "label");
  } else if (detail::HasKind(text, "path")) {
    const auto a = detail::SpecArgs(text, "path", 3);
    d.kind = DistributionSpec::Kind::kPath;
    d.baseline = detail::ParseNumber(a[0], "baseline");
    d.index = detail::ParseIndex(a[1], "index");
    d.steps = detail::ParseIndex(a[2], "steps");
    if (d.steps == 0) throw Error(ErrorKind::kInvalidArgument, "steps must be >= 1");
  } else {
    throw Error(ErrorKind::kInvalidArgument,
                "unknown distribution '" + std::string(text) + "'");
  }
  return d;
}

// Builds the distribution over `data`. A class with no instances yields an
// empty empirical distribution, which influence rejects as EmptyDistribution.
inline DistributionOfInterest MakeDistribution(const DistributionSpec& d,
                                               const LabeledDataset& data) {
  auto instance = [&]() -> const Tensor& {
    if (d.index >= data.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "instance " + std::to_string(d.index) + " outside dataset of " +
                      std::to_string(data.size()));
    }
    return data.instances[d.index];
  };
  switch (d.kind) {
    case DistributionSpec::Kind::kPoint:
      return PointMass{instance()};
    case DistributionSpec::Kind::kClass:
      return Empirical::Uniform(data.OfClass(d.index));
    case DistributionSpec::Kind::kPath: {
      const Tensor& x = instance();
      return LinearPath{Tensor::Filled(x.shape(), d.baseline), x, d.steps};
    }
  }
  return PointMass{instance()};
}

// Comma-separated nonnegative integers, e.g. "0,4,8".
inline std::vector<std::size_t> ParseIndexList(std::string_view text) {
  std::vector<std::size_t> out;
  for (std::string_view f : detail::SplitFields(text, ',')) {
    out.push_back(detail::ParseIndex(f, "list entry"));
  }
  return out;
}

}  // namespace distinf
