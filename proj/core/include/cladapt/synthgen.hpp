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
#include <vector>

#include "cladapt/embedding_store.hpp"
#include "cladapt/linalg.hpp"

namespace cladapt {

/// Synthetic stand-in for encoder outputs with a controllable text/image gap.
///
/// Class prototypes p_c are uniform on the unit sphere and double as text
/// embeddings. Image samples are normalize((1−δ) p_c + δ R p_c + σ ε) where R
/// is a seeded rotation, either shared or drawn per task.
struct SynthConfig {
  std::size_t dim = 32;
  std::size_t classes = 10;
  std::size_t per_class = 100;
  double sigma = 0.05;
  double delta = 0.0;
  bool per_task_distortion = false;
  std::uint64_t seed = 0;
  /// Task layout the per-task rotations follow; also written to the manifest.
  std::size_t num_tasks = 5;
  Split split = Split::b0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct SynthData {
  EmbeddingSet images;
  EmbeddingSet text;
  std::vector<std::size_t> class_order;
  std::vector<std::vector<std::size_t>> tasks;
};

SynthData generate(const SynthConfig& cfg);

/// Orthogonal matrix from modified Gram-Schmidt on a seeded Gaussian matrix.
/// The implied triangular factor has a positive diagonal, so the result is
/// unique for a given seed.
DenseMatrix random_rotation(std::size_t dim, std::uint64_t seed);

struct SynthFiles {
  std::filesystem::path images;
  std::filesystem::path text;
  std::filesystem::path manifest;
};

/// Writes images.cem, text.cem and manifest.json into `out_dir`.
SynthFiles write_synthetic(const SynthData& data, const SynthConfig& cfg,
                           const std::filesystem::path& out_dir);

}  // namespace cladapt
