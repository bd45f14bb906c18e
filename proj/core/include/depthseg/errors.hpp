// Copyright 2026 The DepthSeg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace depthseg {

// Process exit codes. These are part of the CLI contract; do not renumber.
enum class ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kData = 3,
  kDivergence = 4,
  kMetric = 5,
  kContract = 6,
};

enum class ErrorKind : std::uint8_t {
  kInput,          // malformed argument or tensor (shape, range, NaN)
  kConfig,         // bad configuration or weight file
  kContract,       // module-to-module shape/level contract violated
  kMissingLabel,   // pseudo-label (or depth file) not available for a tile
  kIllegalClass,   // mask value outside the class schema
  kShapeMismatch,  // paired files disagree on geometry
  kUnreadableFile, // I/O failure
  kDivergence,     // non-finite loss during training
  kUndefinedLoss,  // every pixel ignored
  kUndefinedMetric // empty confusion matrix
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define DEPTHSEG_DEFINE_ERROR(Name, Kind) \
  class Name : public Error {             \
   public:                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

DEPTHSEG_DEFINE_ERROR(InputError, kInput)
DEPTHSEG_DEFINE_ERROR(ConfigError, kConfig)
DEPTHSEG_DEFINE_ERROR(ContractError, kContract)
DEPTHSEG_DEFINE_ERROR(MissingLabelError, kMissingLabel)
DEPTHSEG_DEFINE_ERROR(IllegalClassError, kIllegalClass)
DEPTHSEG_DEFINE_ERROR(ShapeMismatchError, kShapeMismatch)
DEPTHSEG_DEFINE_ERROR(UnreadableFileError, kUnreadableFile)
DEPTHSEG_DEFINE_ERROR(UndefinedLossError, kUndefinedLoss)
DEPTHSEG_DEFINE_ERROR(UndefinedMetricError, kUndefinedMetric)

#undef DEPTHSEG_DEFINE_ERROR

class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t step, const std::string& what)
      : Error(ErrorKind::kDivergence, what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

inline ExitCode exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return ExitCode::kConfig;
    case ErrorKind::kInput:
    case ErrorKind::kMissingLabel:
    case ErrorKind::kIllegalClass:
    case ErrorKind::kShapeMismatch:
    case ErrorKind::kUnreadableFile:
    case ErrorKind::kUndefinedLoss:
      return ExitCode::kData;
    case ErrorKind::kDivergence:
      return ExitCode::kDivergence;
    case ErrorKind::kUndefinedMetric:
      return ExitCode::kMetric;
    case ErrorKind::kContract:
      return ExitCode::kContract;
  }
  return ExitCode::kInternal;
}

}  // namespace depthseg
