// Copyright 2026 The stb Authors.
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

#ifndef STB_ERROR_H_
#define STB_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace stb {

enum class ErrorKind {
  kParse,
  kInvariant,
  kPrecondition,
  kTransport,
  kPartialResult,
  kUnsatisfiable,
  kUnknownItem,
  kUnassignedWorker,
  kDuplicate,
  kMissingFeature,
  kUndefinedRate,
  kNoMatches,
  kUnidentifiable,
  kConvergence,
  kStorage,
  kNotFound,
};

std::string_view ErrorKindName(ErrorKind kind);

// The single exception type thrown by the library. Callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace stb

#endif  // STB_ERROR_H_
