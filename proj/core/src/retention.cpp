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

#include "cladapt/retention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cladapt/errors.hpp"
#include "cladapt/rng.hpp"

namespace cladapt {

std::string_view to_string(RetentionStrategy s) noexcept {
  switch (s) {
    case RetentionStrategy::drift_ranked: return "drift_ranked";
    case RetentionStrategy::random: return "random";
    case RetentionStrategy::none: return "none";
  }
  return "?";
}

std::string_view to_string(RetentionGranularity g) noexcept {
  return g == RetentionGranularity::global ? "global" : "per_matrix";
}

RetentionStrategy parse_retention_strategy(std::string_view s) {
  if (s == "drift_ranked") return RetentionStrategy::drift_ranked;
  if (s == "random") return RetentionStrategy::random;
  if (s == "none") return RetentionStrategy::none;
  throw ConfigError("unknown retention strategy \"" + std::string(s) + "\"");
}

RetentionGranularity parse_retention_granularity(std::string_view s) {
  if (s == "global") return RetentionGranularity::global;
  if (s == "per_matrix") return RetentionGranularity::per_matrix;
  throw ConfigError("unknown retention granularity \"" + std::string(s) + "\"");
}

namespace {

void check_lengths(const FlatParamView& prev, const FlatParamView& cur, const char* op) {
  if (prev.size() != cur.size()) {
    throw ContractViolation(std::string(op) + ": length mismatch " + std::to_string(prev.size()) +
                            " vs " + std::to_string(cur.size()));
  }
}

std::vector<std::size_t> resolve_segments(std::span<const std::size_t> segments,
                                          std::size_t total, RetentionGranularity g) {
  if (g == RetentionGranularity::global || segments.empty()) return {total};
  const auto sum = std::accumulate(segments.begin(), segments.end(), std::size_t{0});
  if (sum != total) throw ContractViolation("merge: segment lengths do not cover the view");
  return {segments.begin(), segments.end()};
}

}  // namespace

FlatParamView drift(const FlatParamView& prev, const FlatParamView& cur) {
  check_lengths(prev, cur, "drift");
  FlatParamView out;
  out.values.resize(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) out.values[i] = std::abs(prev.values[i] - cur.values[i]);
  return out;
}

std::size_t retained_count(double gamma, std::size_t pool_size) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractViolation("gamma must lie in [0, 1]");
  const auto r = static_cast<std::size_t>(std::floor(gamma * static_cast<double>(pool_size) + 0.5));
  return std::min(r, pool_size);
}

std::vector<std::size_t> retained_indices(const FlatParamView& prev, const FlatParamView& cur,
                                          const RetentionConfig& cfg,
                                          std::span<const std::size_t> segments) {
  check_lengths(prev, cur, "merge");
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) throw ContractViolation("gamma must lie in [0, 1]");
  std::vector<std::size_t> kept;
  if (cfg.strategy == RetentionStrategy::none) return kept;

  const auto drifts = drift(prev, cur);
  const auto segs = resolve_segments(segments, prev.size(), cfg.granularity);
  std::size_t offset = 0;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const std::size_t len = segs[s];
    const std::size_t r = retained_count(cfg.gamma, len);
    std::vector<std::size_t> idx(len);
    std::iota(idx.begin(), idx.end(), offset);
    if (cfg.strategy == RetentionStrategy::drift_ranked) {
      const auto& d = drifts.values;
      // (drift, index) is a strict total order, so the selected set is unique.
      std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(r), idx.end(),
                       [&](std::size_t a, std::size_t b) {
                         return d[a] < d[b] || (d[a] == d[b] && a < b);
                       });
    } else {
      // Partial Fisher-Yates: the first r slots become a uniform sample.
      Rng rng(derive_seed(cfg.rng_seed, "random_retention", s));
      for (std::size_t i = 0; i < r; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(len - i));
        std::swap(idx[i], idx[j]);
      }
    }
    kept.insert(kept.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(r));
    offset += len;
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

FlatParamView merge(const FlatParamView& prev, const FlatParamView& cur, const RetentionConfig& cfg,
                    std::span<const std::size_t> segments) {
  FlatParamView out = cur;
  for (const auto i : retained_indices(prev, cur, cfg, segments)) out.values[i] = prev.values[i];
  return out;
}

AdapterParams merge(const AdapterParams& prev, const AdapterParams& cur, const RetentionConfig& cfg) {
  if (prev.kind != cur.kind || prev.dim != cur.dim) {
    throw ContractViolation("merge: adapters differ in kind or dimension");
  }
  const auto segs = segment_sizes(cur);
  return unflatten(merge(flatten(prev), flatten(cur), cfg, segs), cur.kind, cur.dim,
                   cur.attention_mode);
}

}  // namespace cladapt
