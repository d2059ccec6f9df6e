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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cladapt/adapters.hpp"

namespace cladapt {

enum class RetentionStrategy { drift_ranked, random, none };
enum class RetentionGranularity { global, per_matrix };

std::string_view to_string(RetentionStrategy s) noexcept;
std::string_view to_string(RetentionGranularity g) noexcept;
RetentionStrategy parse_retention_strategy(std::string_view s);
RetentionGranularity parse_retention_granularity(std::string_view s);

struct RetentionConfig {
  /// Fraction of parameters kept from the previous adapter, in [0, 1].
  double gamma = 0.8;
  RetentionStrategy strategy = RetentionStrategy::drift_ranked;
  RetentionGranularity granularity = RetentionGranularity::global;
  std::uint64_t rng_seed = 0;  // random strategy only

  friend bool operator==(const RetentionConfig&, const RetentionConfig&) = default;
};

/// |prev - cur| elementwise.
FlatParamView drift(const FlatParamView& prev, const FlatParamView& cur);

/// round-half-up(γ · P): how many entries a pool of P parameters retains.
std::size_t retained_count(double gamma, std::size_t pool_size);

/// Indices (ascending) whose previous value is kept. For drift_ranked these are
/// the retained_count smallest drifts, ties broken by lowest index.
std::vector<std::size_t> retained_indices(const FlatParamView& prev, const FlatParamView& cur,
                                          const RetentionConfig& cfg,
                                          std::span<const std::size_t> segments = {});

/// Selects each entry from `prev` (low drift) or `cur` (high drift).
/// `segments` lists per-matrix lengths for per_matrix granularity; an empty
/// span treats the whole view as one segment.
FlatParamView merge(const FlatParamView& prev, const FlatParamView& cur, const RetentionConfig& cfg,
                    std::span<const std::size_t> segments = {});

/// merge() on adapter parameters, using the adapter's matrices as segments.
AdapterParams merge(const AdapterParams& prev, const AdapterParams& cur, const RetentionConfig& cfg);

}  // namespace cladapt
