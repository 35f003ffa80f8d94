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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace terraseg {

/// Machine-readable failure kinds. The names double as the `code` field of
/// structured error bodies emitted by the CLI and the HTTP service.
enum class ErrorCode {
  // schema
  kDuplicateRawValue,
  kDuplicateIndex,
  kNonPositiveWeight,
  kMissingField,
  kInvalidSchema,
  // codecs
  kUnknownRawValue,
  kNotGrayscale,
  kCorruptPng,
  kBadMagic,
  kVersionUnsupported,
  kShapeOverflow,
  kTruncatedPayload,
  kNonFiniteValue,
  kNormalizationViolation,
  // shared validation
  kDimensionMismatch,
  kIndexOutOfRange,
  kInvalidArgument,
  // metrics / loss
  kEmptyAccumulator,
  kAllPixelsIgnored,
  kNoPresentClasses,
  // augmentation
  kDegenerateWindow,
  kZeroStd,
  // postprocess
  kNonFiniteInput,
  kEmptyViewList,
  kInvalidProbabilities,
  kEmptySampleList,
  kShapeMismatch,
  kEmptyInput,
  // planning
  kSingularHomography,
  kStartBlocked,
  kGoalBlocked,
  kNoPath,
  // environment
  kIo,
};

std::string_view error_code_name(ErrorCode code);

/// Validation failures map to exit code 1 / HTTP 400; I/O failures to exit
/// code 2.
enum class ErrorCategory { kValidation, kIo };

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept {
    return code_ == ErrorCode::kIo ? ErrorCategory::kIo
                                   : ErrorCategory::kValidation;
  }

 private:
  ErrorCode code_;
};

}  // namespace terraseg
