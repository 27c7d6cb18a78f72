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

#ifndef CFSHAP_FINGERPRINT_HPP_
#define CFSHAP_FINGERPRINT_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace cfshap {

// Incremental SHA-256 over typed values. Strings are length-prefixed and
// numbers are hashed by their little-endian byte image, so distinct field
// sequences cannot collide by concatenation.
class Fingerprint {
 public:
  Fingerprint();
  ~Fingerprint();
  Fingerprint(const Fingerprint&) = delete;
  Fingerprint& operator=(const Fingerprint&) = delete;

  Fingerprint& add(std::string_view text);
  Fingerprint& add(std::uint64_t value);
  Fingerprint& add(double value);
  Fingerprint& add(std::span<const double> values);
  Fingerprint& add(std::span<const int> values);

  // Lowercase hex digest. The object must not be reused afterwards.
  std::string hex();

 private:
  void update(const void* data, std::size_t size);
  struct State;
  std::unique_ptr<State> state_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::string& path);

}  // namespace cfshap

#endif  // CFSHAP_FINGERPRINT_HPP_
