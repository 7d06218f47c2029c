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

#include <stdexcept>
#include <string>
#include <string_view>

namespace distinf {

// Every failure the library reports carries one of these kinds. The CLI
// prints the kind name, so names are stable.
enum class ErrorKind {
  kShapeMismatch,
  kNonFinite,
  kInvalidClassIndex,
  kInvalidUnit,
  kInvalidArgument,
  kEmptyDistribution,
  kNotConvActivation,
  kEmptyBatch,
  kEmptyInstanceSet,
  kDegenerateNormalization,
  kNoFeasibleExpert,
  kNonSpatialPrefix,
  kInvalidChannels,
  kIOFailure,
  kCorruptManifest,
  kBlobLengthMismatch,
  kUnsupportedVersion,
  kBadMagic,
  kDimensionMismatch,
  kCountMismatch,
  kNonFiniteLoss,
};

constexpr std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kNonFinite: return "NonFinite";
    case ErrorKind::kInvalidClassIndex: return "InvalidClassIndex";
    case ErrorKind::kInvalidUnit: return "InvalidUnit";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kEmptyDistribution: return "EmptyDistribution";
    case ErrorKind::kNotConvActivation: return "NotConvActivation";
    case ErrorKind::kEmptyBatch: return "EmptyBatch";
    case ErrorKind::kEmptyInstanceSet: return "EmptyInstanceSet";
    case ErrorKind::kDegenerateNormalization: return "DegenerateNormalization";
    case ErrorKind::kNoFeasibleExpert: return "NoFeasibleExpert";
    case ErrorKind::kNonSpatialPrefix: return "NonSpatialPrefix";
    case ErrorKind::kInvalidChannels: return "InvalidChannels";
    case ErrorKind::kIOFailure: return "IOFailure";
    case ErrorKind::kCorruptManifest: return "CorruptManifest";
    case ErrorKind::kBlobLengthMismatch: return "BlobLengthMismatch";
    case ErrorKind::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::kBadMagic: return "BadMagic";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kCountMismatch: return "CountMismatch";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return ErrorKindName(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace distinf
