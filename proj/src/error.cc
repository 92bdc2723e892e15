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

#include "stb/error.h"

namespace stb {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kInvariant: return "invariant violation";
    case ErrorKind::kPrecondition: return "precondition violation";
    case ErrorKind::kTransport: return "transport error";
    case ErrorKind::kPartialResult: return "partial result";
    case ErrorKind::kUnsatisfiable: return "constraint unsatisfiable";
    case ErrorKind::kUnknownItem: return "unknown item";
    case ErrorKind::kUnassignedWorker: return "unassigned worker";
    case ErrorKind::kDuplicate: return "duplicate submission";
    case ErrorKind::kMissingFeature: return "missing feature";
    case ErrorKind::kUndefinedRate: return "undefined rate";
    case ErrorKind::kNoMatches: return "no matches";
    case ErrorKind::kUnidentifiable: return "unidentifiable coefficient";
    case ErrorKind::kConvergence: return "non-convergence";
    case ErrorKind::kStorage: return "storage failure";
    case ErrorKind::kNotFound: return "not found";
  }
  return "error";
}

}  // namespace stb
