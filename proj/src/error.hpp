// Copyright 2026 The Wideflow Authors
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

#ifndef WIDEFLOW_ERROR_HPP_
#define WIDEFLOW_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace wideflow {

enum class ErrorKind {
  kValidation,    // bad input or precondition violation
  kInconclusive,  // numerics cannot decide at the configured resolution
  kNonFinite,     // an evaluation produced NaN or Inf
  kIo,
};

// All library failures are reported through this exception. The C API maps
// the kind onto its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& what) {
  throw Error(ErrorKind::kValidation, what);
}

[[noreturn]] inline void fail_inconclusive(const std::string& what) {
  throw Error(ErrorKind::kInconclusive, what);
}

[[noreturn]] inline void fail_non_finite(const std::string& what) {
  throw Error(ErrorKind::kNonFinite, what);
}

}  // namespace wideflow

#endif  // WIDEFLOW_ERROR_HPP_
