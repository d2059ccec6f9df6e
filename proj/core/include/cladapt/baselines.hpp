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

#include "cladapt/objective.hpp"
#include "cladapt/optimizers.hpp"
#include "cladapt/scenario.hpp"

namespace cladapt {

/// Appends `new_classes` rows drawn N(0, 1/M) and zero biases. Existing rows
/// and biases are copied bit-for-bit. Throws ContractViolation when
/// new_classes == 0.
ProbeHead expand_head(const ProbeHead& head, std::size_t dim, std::size_t new_classes,
                      std::uint64_t seed);

/// Flat layout used by the optimizer: weights row-major, then bias.
FlatParamView flatten(const ProbeHead& head);
ProbeHead unflatten_head(const FlatParamView& view, std::size_t classes, std::size_t dim);

/// Mini-batch training of the probe head on raw embeddings, cosine schedule.
ProbeHead train_probe(ProbeHead head, const Batch& train, const TrainOptions& options);

EvalResult evaluate_probe(const ProbeHead& head, const Batch& test);

/// Runs a comparison method under the scenario harness. Accepts zero_shot,
/// linear_probe, adapter_kd and adapter_retention with the random strategy.
RunResult run_baseline(const ScenarioConfig& config, const ScenarioData& data, std::uint64_t seed);

}  // namespace cladapt
