// Copyright 2026 The posg-synth Authors.
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace posg {

enum class ErrorCode {
  kParseError,
  kInvalidPath,
  kIncompatibleStrategy,
  kEnumerationTooLarge,
  kNonAbsorbingTarget,
  kSolverDivergence,
  kDimensionMismatch,
  kNoAvailableAction,
  kInvalidGame,
  kInvalidArgument,
  kScenarioInvalid,
  kStateSpaceTooLarge,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kInvalidPath: return "InvalidPath";
    case ErrorCode::kIncompatibleStrategy: return "IncompatibleStrategy";
    case ErrorCode::kEnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorCode::kNonAbsorbingTarget: return "NonAbsorbingTarget";
    case ErrorCode::kSolverDivergence: return "SolverDivergence";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNoAvailableAction: return "NoAvailableAction";
    case ErrorCode::kInvalidGame: return "InvalidGame";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kScenarioInvalid: return "ScenarioInvalid";
    case ErrorCode::kStateSpaceTooLarge: return "StateSpaceTooLarge";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace posg
