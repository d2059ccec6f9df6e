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

#include "cladapt/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cladapt/errors.hpp"
#include "cladapt/rng.hpp"

namespace cladapt {

ProbeHead expand_head(const ProbeHead& head, std::size_t dim, std::size_t new_classes,
                      std::uint64_t seed) {
  if (new_classes == 0) throw ContractViolation("expand_head: new_classes must be >= 1");
  if (head.num_classes() > 0 && head.weights.cols() != dim) {
    throw ContractViolation("expand_head: dimension mismatch");
  }
  const std::size_t old_k = head.num_classes();
  std::vector<double> w = head.weights.values();
  std::vector<double> b = head.bias.values();
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < new_classes * dim; ++i) w.push_back(sd * rng.normal());
  b.resize(old_k + new_classes, 0.0);
  return {DenseMatrix(old_k + new_classes, dim, std::move(w)), DenseVector(std::move(b))};
}

FlatParamView flatten(const ProbeHead& head) {
  FlatParamView v;
  v.values = head.weights.values();
  v.values.insert(v.values.end(), head.bias.begin(), head.bias.end());
  return v;
}

ProbeHead unflatten_head(const FlatParamView& view, std::size_t classes, std::size_t dim) {
  if (view.size() != classes * dim + classes) throw ContractViolation("unflatten_head: length mismatch");
  const auto split = view.values.begin() + static_cast<std::ptrdiff_t>(classes * dim);
  return {DenseMatrix(classes, dim, std::vector<double>(view.values.begin(), split)),
          DenseVector(std::vector<double>(split, view.values.end()))};
}

ProbeHead train_probe(ProbeHead head, const Batch& train, const TrainOptions& options) {
  const std::size_t n = train.size();
  if (n == 0 || options.epochs == 0) return head;
  if (options.batch_size == 0) throw ContractViolation("train_probe: batch_size must be >= 1");
  const std::size_t k = head.num_classes();
  const std::size_t dim = head.weights.cols();
  const std::size_t per_epoch = (n + options.batch_size - 1) / options.batch_size;
  const CosineSchedule schedule{options.optimizer.lr, options.epochs * per_epoch};
  FlatParamView flat = flatten(head);
  Optimizer optimizer(options.optimizer, flat.size());

  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(options.shuffle_seed, "epoch", epoch));
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      Batch mb;
      for (std::size_t i = start; i < std::min(n, start + options.batch_size); ++i) {
        mb.inputs.push_back(train.inputs[order[i]]);
        mb.labels.push_back(train.labels[order[i]]);
      }
      const auto g = probe_grad(head, mb);
      std::vector<double> grad = g.weights.values();
      grad.insert(grad.end(), g.bias.begin(), g.bias.end());
      optimizer.step(flat.values, grad, schedule.lr_at(step++));
      head = unflatten_head(flat, k, dim);
    }
  }
  return head;
}

EvalResult evaluate_probe(const ProbeHead& head, const Batch& test) {
  EvalResult r;
  r.per_class_correct.assign(head.num_classes(), 0);
  r.per_class_total.assign(head.num_classes(), 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t y = test.labels[i];
    if (y >= head.num_classes()) throw ContractViolation("evaluate_probe: label out of range");
    const std::size_t pred = argmax(probe_logits(head, test.inputs[i]));
    r.predictions.push_back(pred);
    ++r.per_class_total[y];
    if (pred == y) {
      ++r.per_class_correct[y];
      ++r.correct;
    }
  }
  r.total = test.size();
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

RunResult run_baseline(const ScenarioConfig& config, const ScenarioData& data, std::uint64_t seed) {
  const bool random_retention = config.method == Method::adapter_retention &&
                                config.retention.strategy == RetentionStrategy::random;
  const bool baseline = config.method == Method::zero_shot || config.method == Method::linear_probe ||
                        config.method == Method::adapter_kd || random_retention;
  if (!baseline) {
    throw ConfigError("run_baseline: method " + std::string(to_string(config.method)) +
                      " is not a comparison baseline");
  }
  return run(config, data, seed);
}

}  // namespace cladapt
