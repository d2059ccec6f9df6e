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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cladapt/linalg.hpp"

namespace cladapt {

struct EmbeddingRecord {
  std::uint32_t class_index = 0;
  DenseVector vector;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

/// Labeled collection of fixed-dimension embeddings. Image sets hold any number
/// of records per class; text sets hold exactly one record per class.
struct EmbeddingSet {
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  std::vector<EmbeddingRecord> records;

  std::size_t num_classes() const noexcept { return class_names.size(); }

  /// Throws ContractViolation on out-of-range labels, wrong vector dims,
  /// duplicate class names or non-finite entries.
  void validate() const;

  bool is_text_set() const;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

/// K×M matrix whose row c is the text embedding of class c.
DenseMatrix text_matrix(const EmbeddingSet& text);

/// Serialized "CEM1" container.
std::vector<std::uint8_t> encode_embedding_set(const EmbeddingSet& set);
EmbeddingSet decode_embedding_set(std::span<const std::uint8_t> bytes);

EmbeddingSet read_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const EmbeddingSet& set, const std::filesystem::path& path);

/// Byte size of a container holding `set`, computed from the layout alone.
std::size_t embedding_file_size(const EmbeddingSet& set);

inline constexpr char kEmbeddingMagic[4] = {'C', 'E', 'M', '1'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;

enum class Split { b0, b50 };

std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view s);

struct Manifest {
  /// Either [all] (split 80/20 per class by index) or [train, test].
  std::vector<std::filesystem::path> image_embeddings;
  std::filesystem::path text_embeddings;
  Split split = Split::b0;
  std::size_t num_tasks = 1;
  std::uint64_t seed = 0;
  std::optional<std::vector<std::size_t>> class_order;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Parses manifest JSON. Relative paths are resolved against `base_dir`.
Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir = {});
Manifest read_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// Class order for a run: the explicit order when present, otherwise a
/// shuffle of 0..K-1 seeded from `seed`.
std::vector<std::size_t> resolve_class_order(const std::optional<std::vector<std::size_t>>& explicit_order,
                                             std::size_t num_classes, std::uint64_t seed);

/// Partitions `class_order` into tasks. B0: T equal tasks. B50: the first task
/// holds ceil(K/2) classes and the rest are divided equally over T-1 tasks.
/// Throws ConfigError when the classes do not divide evenly.
std::vector<std::vector<std::size_t>> split_tasks(Split split, std::size_t num_tasks,
                                                  const std::vector<std::size_t>& class_order);

std::vector<std::vector<std::size_t>> split_tasks(const Manifest& manifest, std::size_t num_classes);

}  // namespace cladapt
