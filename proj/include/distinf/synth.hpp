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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "distinf/dataset.hpp"
#include "distinf/random.hpp"

namespace distinf {

inline constexpr std::size_t kSynthSide = 8;
inline constexpr std::size_t kSynthMaxClasses = 8;

namespace detail {

using Stroke = std::vector<std::pair<int, int>>;  // (row, col) before jitter

inline Stroke SynthTemplate(std::size_t cls) {
  Stroke s;
  auto line = [&](int r0, int c0, int dr, int dc, int n) {
    for (int i = 0; i < n; ++i) s.emplace_back(r0 + i * dr, c0 + i * dc);
  };
  switch (cls) {
    case 0:  // horizontal bar
      line(3, 1, 0, 1, 6);
      line(4, 1, 0, 1, 6);
      break;
    case 1:  // vertical bar
      line(1, 3, 1, 0, 6);
      line(1, 4, 1, 0, 6);
      break;
    case 2:  // cross
      line(3, 1, 0, 1, 6);
      line(1, 3, 1, 0, 6);
      break;
    case 3:  // box outline
      line(1, 1, 0, 1, 6);
      line(6, 1, 0, 1, 6);
      line(2, 1, 1, 0, 4);
      line(2, 6, 1, 0, 4);
      break;
    case 4:  // diagonal
      line(1, 1, 1, 1, 6);
      line(1, 2, 1, 1, 5);
      break;
    case 5:  // anti-diagonal
      line(1, 6, 1, -1, 6);
      line(1, 5, 1, -1, 5);
      break;
    case 6:  // L
      line(1, 1, 1, 0, 6);
      line(6, 2, 0, 1, 5);
      break;
    default:  // filled square
      for (int r = 2; r < 6; ++r) line(r, 2, 0, 1, 4);
      break;
  }
  return s;
}

inline double QuantizeByte(double v) {
  return std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5) / 255.0;
}

}  // namespace detail

// Seeded 8x8 grayscale shapes, one template per class (bars, cross, box,
// diagonals, L, square), jittered by up to one pixel with stroke intensity in
// [0.6, 1], 10% stroke dropout and background noise in [0, 0.25]. Pixels are
// byte-quantized so IDX export round-trips exactly. Instances are interleaved
// by class.
inline LabeledDataset SynthDataset(std::uint64_t seed, std::size_t n_per_class,
                                   std::size_t classes,
                                   std::string split = "train") {
  if (classes < 2 || classes > kSynthMaxClasses) {
    throw Error(ErrorKind::kInvalidArgument,
                "synthetic dataset supports 2.." +
                    std::to_string(kSynthMaxClasses) + " classes");
  }
  Rng rng(seed);
  LabeledDataset ds;
  ds.split = std::move(split);
  const int side = static_cast<int>(kSynthSide);
  for (std::size_t n = 0; n < n_per_class; ++n) {
    for (std::size_t cls = 0; cls < classes; ++cls) {
      Tensor img({1, kSynthSide, kSynthSide});
      for (double& v : img.values()) v = rng.Uniform(0.0, 0.25);
      const int dr = static_cast<int>(rng.Below(3)) - 1;
      const int dc = static_cast<int>(rng.Below(3)) - 1;
      const double intensity = rng.Uniform(0.6, 1.0);
      for (auto [r, c] : detail::SynthTemplate(cls)) {
        const double drop = rng.Uniform();
        const int rr = r + dr, cc = c + dc;
        if (rr < 0 || rr >= side || cc < 0 || cc >= side || drop < 0.1) continue;
        img.at(0, static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) =
            intensity;
      }
      for (double& v : img.values()) v = detail::QuantizeByte(v);
      ds.instances.push_back(std::move(img));
      ds.labels.push_back(cls);
    }
  }
  return ds;
}

}  // namespace distinf
