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

namespace cladapt {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k) noexcept;
OptimizerKind parse_optimizer_kind(std::string_view s);

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 0.1;
  double weight_decay = 2e-4;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;   // adam
  double epsilon = 1e-8;  // adam

  friend bool operator==(const OptimizerSettings&, const OptimizerSettings&) = default;
};

/// Optimizer state over a flat parameter vector.
///
/// SGD:  v ← μ v + g + wd θ;  θ ← θ − lr v
/// Adam: θ ← θ − lr wd θ (decoupled), then the bias-corrected Adam step.
class Optimizer {
 public:
  Optimizer(OptimizerSettings settings, std::size_t parameter_count);

  /// Updates `params` in place. Throws ContractViolation on length mismatch or lr < 0.
  void step(std::span<double> params, std::span<const double> grads, double lr);

  const OptimizerSettings& settings() const noexcept { return settings_; }
  std::uint64_t step_count() const noexcept { return step_count_; }
  std::size_t parameter_count() const noexcept { return first_.size(); }

 private:
  OptimizerSettings settings_;
  std::vector<double> first_;   // momentum buffer (sgd) or first moment (adam)
  std::vector<double> second_;  // adam only
  std::uint64_t step_count_ = 0;
};

/// lr(step) = 0.5 lr0 (1 + cos(π step / total_steps)).
struct CosineSchedule {
  double lr0 = 0.1;
  std::size_t total_steps = 1;

  /// Throws ContractViolation when step > total_steps.
  double lr_at(std::size_t step) const;
};

}  // namespace cladapt
