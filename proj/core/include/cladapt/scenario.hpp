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
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cladapt/adapters.hpp"
#include "cladapt/embedding_store.hpp"
#include "cladapt/objective.hpp"
#include "cladapt/optimizers.hpp"
#include "cladapt/retention.hpp"

namespace cladapt {

enum class Method { adapter_retention, adapter_plain, zero_shot, linear_probe, adapter_kd };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view s);

struct KdSettings {
  double temperature = 2.0;
  double weight = 1.0;

  friend bool operator==(const KdSettings&, const KdSettings&) = default;
};

struct ScenarioConfig {
  /// Manifest file the data is loaded from; unused by the in-memory overloads.
  std::filesystem::path manifest_path;
  Method method = Method::adapter_retention;
  AdapterKind adapter = AdapterKind::linear;
  AttentionMode attention_mode = AttentionMode::outer;
  InitOptions init;
  RetentionConfig retention;
  OptimizerSettings optimizer;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  std::size_t exemplar_budget = 2000;
  LogitConfig logits;
  KdSettings kd;
  std::vector<std::uint64_t> seeds = {0};

  /// Throws ConfigError on inconsistent or out-of-range settings.
  void validate() const;

  /// True when every field except `seeds` matches.
  bool same_experiment(const ScenarioConfig& other) const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Train/test embeddings, text rows and the task layout for one run.
struct ScenarioData {
  EmbeddingSet train;
  EmbeddingSet test;
  EmbeddingSet text;
  std::vector<std::vector<std::size_t>> tasks;
};

/// First 80% of each class's records (by record order) train, the rest test.
std::pair<EmbeddingSet, EmbeddingSet> split_train_test(const EmbeddingSet& images);

/// Loads the manifest's containers. The class order is the manifest's
/// explicit order, or a shuffle seeded from `seed`.
ScenarioData load_scenario_data(const Manifest& manifest, std::uint64_t seed);

struct AccuracyMatrix {
  /// overall[t]: accuracy on the union of test sets of tasks 0..t after task t.
  std::vector<double> overall;
  /// per_task[t][j], j <= t: accuracy on task j's test set after task t.
  std::vector<std::vector<double>> per_task;
  /// Number of test samples of each task.
  std::vector<std::size_t> test_sizes;

  friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;
};

struct RunResult {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> tasks;
  AccuracyMatrix accuracy;
  double avg = 0.0;
  double last = 0.0;
  std::vector<double> seconds_per_task;

  /// Not serialized: flat parameters used for evaluation after each task
  /// (post-merge for adapter_retention; head weights then bias for linear_probe),
  /// and the union-test-set predictions after each task.
  std::vector<FlatParamView> evaluated_params;
  std::vector<std::vector<std::size_t>> predictions;
  /// Not serialized: the adapter after the last task; empty for zero_shot and linear_probe.
  std::optional<AdapterParams> final_adapter;
};

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::vector<std::size_t> per_class_correct;
  std::vector<std::size_t> per_class_total;
  std::vector<std::size_t> predictions;
};

/// Fraction of samples whose argmax logit against `text` equals the label.
/// Labels index rows of `text`.
EvalResult evaluate(const AdapterParams& params, const Batch& test, const DenseMatrix& text,
                    const LogitConfig& cfg);
EvalResult evaluate(const AdapterParams& params, const EmbeddingSet& test,
                    const EmbeddingSet& text, const LogitConfig& cfg);

struct TrainOptions {
  OptimizerSettings optimizer;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  LogitConfig logits;
  std::uint64_t shuffle_seed = 0;
};

/// Called after every optimizer step with the 0-based step index, the updated
/// parameters and the gradient that produced them.
using StepObserver =
    std::function<void(std::size_t step, const AdapterParams& params, const FlatParamView& grad)>;

/// Mini-batch training of one task with a per-task cosine schedule.
/// `distill`, when non-null, adds distillation on samples flagged in its
/// apply_to mask (indexed like `train`).
AdapterParams train_adapter(AdapterParams params, const Batch& train, const DenseMatrix& text,
                            const TrainOptions& options, const DistillationTerm* distill = nullptr,
                            const StepObserver& observer = {});

/// Runs the class-incremental protocol on in-memory data.
RunResult run(const ScenarioConfig& config, const ScenarioData& data, std::uint64_t seed);
/// Loads data from config.manifest_path, then runs.
RunResult run(const ScenarioConfig& config, std::uint64_t seed);
/// One run per configured seed; up to `jobs` runs execute concurrently.
std::vector<RunResult> run_all(const ScenarioConfig& config, unsigned jobs = 1);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // n−1 denominator; 0 for a single run
};

struct Aggregate {
  std::size_t runs = 0;
  MetricSummary avg;
  MetricSummary last;
};

MetricSummary summarize(std::span<const double> values);
/// Throws ContractViolation when the runs differ in anything but the seed.
Aggregate aggregate(std::span<const RunResult> results);

}  // namespace cladapt
