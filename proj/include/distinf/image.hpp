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
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "distinf/tensor.hpp"

namespace distinf {

// Encodes a C x H x W tensor with C in {1, 3} and values in [0, 1] as binary
// PGM (P5) or PPM (P6), maxval 255, rounding half up.
inline std::string EncodePnm(const Tensor& t) {
  if (t.rank() != 3 || (t.shape()[0] != 1 && t.shape()[0] != 3)) {
    throw Error(ErrorKind::kInvalidChannels,
                "image must be 1xHxW or 3xHxW, got " + ShapeToString(t.shape()));
  }
  const std::size_t c = t.shape()[0], h = t.shape()[1], w = t.shape()[2];
  std::string out = (c == 1 ? "P5\n" : "P6\n") + std::to_string(w) + " " +
                    std::to_string(h) + "\n255\n";
  out.reserve(out.size() + t.size());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t col = 0; col < w; ++col) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double v = t.at(ch, r, col);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw Error(ErrorKind::kInvalidArgument,
                      "pixel value outside [0, 1]");
        }
        out.push_back(static_cast<char>(
            static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5))));
      }
    }
  }
  return out;
}

inline void EmitImage(const Tensor& t, const std::string& path) {
  const std::string bytes = EncodePnm(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIOFailure, "cannot open " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIOFailure, "write failed for " + path);
}

}  // namespace distinf
