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

#include "cladapt/memory.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "cladapt/errors.hpp"
#include "cladapt/rng.hpp"

namespace cladapt {
namespace {

/// Keeps `quota` elements of `items` chosen uniformly at random, preserving
/// their relative order.
template <typename T>
std::vector<T> sample_keep_order(std::vector<T> items, std::size_t quota, Rng& rng) {
  if (items.size() <= quota) return items;
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < quota; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(quota);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(quota);
  for (const auto i : idx) out.push_back(std::move(items[i]));
  return out;
}

}  // namespace

std::vector<std::size_t> ExemplarBuffer::quotas(std::size_t seen) const {
  std::vector<std::size_t> q(seen, 0);
  if (seen == 0) return q;
  for (std::size_t i = 0; i < seen; ++i) q[i] = budget_ / seen + (i < budget_ % seen ? 1 : 0);
  return q;
}

std::size_t ExemplarBuffer::count_of(std::size_t label) const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                [&](const Exemplar& e) { return e.label == label; }));
}

void ExemplarBuffer::rebalance_and_add(const EmbeddingSet& data,
                                       std::span<const std::size_t> new_classes) {
  std::map<std::size_t, std::vector<Exemplar>> incoming;
  for (const auto c : new_classes) {
    if (std::find(class_order_.begin(), class_order_.end(), c) != class_order_.end()) {
      throw ContractViolation("exemplar buffer: class " + std::to_string(c) + " already stored");
    }
    if (!incoming.emplace(c, std::vector<Exemplar>{}).second) {
      throw ContractViolation("exemplar buffer: class " + std::to_string(c) + " listed twice");
    }
  }
  for (const auto& r : data.records) {
    const auto it = incoming.find(r.class_index);
    if (it != incoming.end()) it->second.push_back({r.class_index, r.vector});
  }
  for (const auto& [c, items] : incoming) {
    if (items.empty()) {
      throw ContractViolation("exemplar buffer: new data has no sample of class " + std::to_string(c));
    }
  }

  std::map<std::size_t, std::vector<Exemplar>> by_class;
  for (auto& e : entries_) by_class[e.label].push_back(std::move(e));
  entries_.clear();

  class_order_.insert(class_order_.end(), new_classes.begin(), new_classes.end());
  const auto q = quotas(class_order_.size());
  const std::uint64_t round = rounds_++;
  for (std::size_t i = 0; i < class_order_.size(); ++i) {
    const std::size_t c = class_order_[i];
    Rng rng(derive_seed(derive_seed(seed_, "exemplars", round), "class", c));
    auto& pool = incoming.contains(c) ? incoming[c] : by_class[c];
    auto kept = sample_keep_order(std::move(pool), q[i], rng);
    std::move(kept.begin(), kept.end(), std::back_inserter(entries_));
  }
}

std::vector<Exemplar> ExemplarBuffer::as_batch_source(std::uint64_t shuffle_seed) const {
  std::vector<Exemplar> out = entries_;
  Rng rng(derive_seed(shuffle_seed, "exemplar_stream"));
  rng.shuffle(std::span(out));
  return out;
}

}  // namespace cladapt
