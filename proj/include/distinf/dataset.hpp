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
#include <vector>

#include "distinf/tensor.hpp"

namespace distinf {

struct LabeledDataset {
  std::vector<Tensor> instances;  // values in [0, 1]
  std::vector<std::size_t> labels;
  std::string split = "train";

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }

  // Instances whose label is `cls`, in dataset order.
  std::vector<Tensor> OfClass(std::size_t cls) const {
    std::vector<Tensor> out;
    for (std::size_t n = 0; n < instances.size(); ++n) {
      if (labels[n] == cls) out.push_back(instances[n]);
    }
    return out;
  }
};

}  // namespace distinf
