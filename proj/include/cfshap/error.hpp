// Copyright 2026 The cfshap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CFSHAP_ERROR_HPP_
#define CFSHAP_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfshap {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kNotContrastive,
  kNoCounterfactual,
  kDataError,
  kVersionMismatch,
  kUnavailable,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported by throwing Error. The code drives the
// CLI exit status and the HTTP status of the service.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const { return code_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace cfshap

#endif  // CFSHAP_ERROR_HPP_
