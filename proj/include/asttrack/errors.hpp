// Copyright 2026 The asttrack Authors. All Rights Reserved.
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

namespace asttrack {

enum class ErrorKind {
  kInvalidParameter,
  kProjectionDomain,
  kEmptyInput,
  kVisibility,
  kConfiguration,
  kDimensionMismatch,
  kNonFinite,
  kTrainingDivergence,
  kDegenerateInput,
  kIo,
  kFormat,
  kMissingData,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a category so the CLI can
// report it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by projection when a point is not in front of the camera.
class ProjectionDomainError : public Error {
 public:
  ProjectionDomainError(std::size_t index, const std::string& message)
      : Error(ErrorKind::kProjectionDomain, message), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace asttrack
