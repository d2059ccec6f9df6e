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
#include <vector>

#include "cladapt/embedding_store.hpp"
#include "cladapt/linalg.hpp"

namespace cladapt {

struct Exemplar {
  std::size_t label = 0;
  DenseVector vector;

  friend bool operator==(const Exemplar&, const Exemplar&) = default;
};

/// Fixed-capacity, class-balanced replay store of embedded samples.
///
/// Quotas: with S seen classes and budget E every class gets floor(E/S)
/// slots and the first (E mod S) classes in arrival order get one more.
/// Selection within a class is uniform at random, seeded.
class ExemplarBuffer {
 public:
  ExemplarBuffer(std::size_t budget, std::uint64_t seed) : budget_(budget), seed_(seed) {}

  /// Shrinks existing classes to their new quota and samples the classes in
  /// `new_classes` (in arrival order) from `data`. Labels in `data` and in
  /// `new_classes` share one label space. Throws ContractViolation when a new
  /// class has no sample in `data` or was already stored.
  void rebalance_and_add(const EmbeddingSet& data, std::span<const std::size_t> new_classes);

  /// Per-class quotas for `seen` classes under this buffer's budget.
  std::vector<std::size_t> quotas(std::size_t seen) const;

  /// Entries in storage order (grouped by class in arrival order).
  const std::vector<Exemplar>& entries() const noexcept { return entries_; }

  /// Entries in a seeded random order; the multiset of entries is unchanged.
  std::vector<Exemplar> as_batch_source(std::uint64_t shuffle_seed) const;

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t budget() const noexcept { return budget_; }
  const std::vector<std::size_t>& class_order() const noexcept { return class_order_; }
  std::size_t count_of(std::size_t label) const;

 private:
  std::size_t budget_;
  std::uint64_t seed_;
  std::uint64_t rounds_ = 0;
  std::vector<std::size_t> class_order_;
  std::vector<Exemplar> entries_;
};

}  // namespace cladapt
