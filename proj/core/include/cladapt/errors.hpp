// Copyright 2026 The cladapt Authors
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

namespace cladapt {

/// Precondition violated by the caller (dimension mismatch, out-of-range label, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input is well-formed but numerically unusable, e.g. normalizing a zero vector.
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid experiment or generator configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed container file. Carries the byte offset and the section being parsed.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string section, std::uint64_t offset, const std::string& what)
      : std::runtime_error(section + " at byte " + std::to_string(offset) + ": " + what),
        section_(std::move(section)),
        offset_(offset) {}

  const std::string& section() const noexcept { return section_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::string section_;
  std::uint64_t offset_;
};

}  // namespace cladapt
