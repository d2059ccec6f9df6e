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

#include "cladapt/optimizers.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cladapt/errors.hpp"

namespace cladapt {

std::string_view to_string(OptimizerKind k) noexcept { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer_kind(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer \"" + std::string(s) + "\"");
}

Optimizer::Optimizer(OptimizerSettings settings, std::size_t parameter_count)
    : settings_(settings), first_(parameter_count, 0.0) {
  if (settings_.kind == OptimizerKind::adam) second_.assign(parameter_count, 0.0);
}

void Optimizer::step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != first_.size() || grads.size() != first_.size()) {
    throw ContractViolation("optimizer step: expected " + std::to_string(first_.size()) +
                            " parameters, got params=" + std::to_string(params.size()) +
                            " grads=" + std::to_string(grads.size()));
  }
  if (!(lr >= 0.0)) throw ContractViolation("optimizer step: lr must be >= 0");
  ++step_count_;
  const double wd = settings_.weight_decay;

  if (settings_.kind == OptimizerKind::sgd) {
    const double mu = settings_.momentum;
    for (std::size_t i = 0; i < params.size(); ++i) {
      first_[i] = mu * first_[i] + grads[i] + wd * params[i];
      params[i] -= lr * first_[i];
    }
    return;
  }

  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= lr * wd * params[i];
    first_[i] = b1 * first_[i] + (1.0 - b1) * grads[i];
    second_[i] = b2 * second_[i] + (1.0 - b2) * grads[i] * grads[i];
    const double m_hat = first_[i] / c1;
    const double v_hat = second_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
  }
}

double CosineSchedule::lr_at(std::size_t step) const {
  if (step > total_steps) {
    throw ContractViolation("lr_at: step " + std::to_string(step) + " beyond total " +
                            std::to_string(total_steps));
  }
  if (total_steps == 0) return lr0;
  const double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace cladapt
