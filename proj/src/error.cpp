// Copyright 2026 The TerraSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "terraseg/error.hpp"

namespace terraseg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDuplicateRawValue: return "DuplicateRawValue";
    case ErrorCode::kDuplicateIndex: return "DuplicateIndex";
    case ErrorCode::kNonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kInvalidSchema: return "InvalidSchema";
    case ErrorCode::kUnknownRawValue: return "UnknownRawValue";
    case ErrorCode::kNotGrayscale: return "NotGrayscale";
    case ErrorCode::kCorruptPng: return "CorruptPng";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kShapeOverflow: return "ShapeOverflow";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kNormalizationViolation: return "NormalizationViolation";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyAccumulator: return "EmptyAccumulator";
    case ErrorCode::kAllPixelsIgnored: return "AllPixelsIgnored";
    case ErrorCode::kNoPresentClasses: return "NoPresentClasses";
    case ErrorCode::kDegenerateWindow: return "DegenerateWindow";
    case ErrorCode::kZeroStd: return "ZeroStd";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kEmptyViewList: return "EmptyViewList";
    case ErrorCode::kInvalidProbabilities: return "InvalidProbabilities";
    case ErrorCode::kEmptySampleList: return "EmptySampleList";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kSingularHomography: return "SingularHomography";
    case ErrorCode::kStartBlocked: return "StartBlocked";
    case ErrorCode::kGoalBlocked: return "GoalBlocked";
    case ErrorCode::kNoPath: return "NoPath";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

}  // namespace terraseg
