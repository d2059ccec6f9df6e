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

#include "cladapt/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <string>

#include "cladapt/baselines.hpp"
#include "cladapt/errors.hpp"
#include "cladapt/memory.hpp"
#include "cladapt/rng.hpp"

namespace cladapt {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::adapter_retention: return "adapter_retention";
    case Method::adapter_plain: return "adapter_plain";
    case Method::zero_shot: return "zero_shot";
    case Method::linear_probe: return "linear_probe";
    case Method::adapter_kd: return "adapter_kd";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  for (const auto m : {Method::adapter_retention, Method::adapter_plain, Method::zero_shot,
                       Method::linear_probe, Method::adapter_kd}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown method \"" + std::string(s) + "\"");
}

void ScenarioConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (method == Method::zero_shot) return;
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(optimizer.lr >= 0.0) || !std::isfinite(optimizer.lr)) throw ConfigError("optimizer.lr must be >= 0");
  if (!(optimizer.weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay must be >= 0");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) {
    throw ConfigError("optimizer.momentum must lie in [0, 1)");
  }
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    throw ConfigError("optimizer betas must lie in [0, 1)");
  }
  if (!(optimizer.epsilon > 0.0)) throw ConfigError("optimizer.epsilon must be > 0");
  if (logits.normalize && !(logits.logit_scale > 0.0)) throw ConfigError("logits.scale must be > 0");
  if (!(retention.gamma >= 0.0 && retention.gamma <= 1.0)) {
    throw ConfigError("retention.gamma must lie in [0, 1]");
  }
  if (!(kd.temperature > 0.0)) throw ConfigError("kd.temperature must be > 0");
  if (!(kd.weight >= 0.0)) throw ConfigError("kd.weight must be >= 0");
  if (init.epsilon < 0.0) throw ConfigError("adapter.init_epsilon must be >= 0");
}

bool ScenarioConfig::same_experiment(const ScenarioConfig& other) const {
  ScenarioConfig a = *this;
  ScenarioConfig b = other;
  a.seeds.clear();
  b.seeds.clear();
  return a == b;
}

std::pair<EmbeddingSet, EmbeddingSet> split_train_test(const EmbeddingSet& images) {
  std::vector<std::size_t> per_class(images.num_classes(), 0);
  for (const auto& r : images.records) ++per_class[r.class_index];
  EmbeddingSet train{images.dim, images.class_names, {}};
  EmbeddingSet test{images.dim, images.class_names, {}};
  std::vector<std::size_t> seen(images.num_classes(), 0);
  for (const auto& r : images.records) {
    const std::size_t n_train = (per_class[r.class_index] * 4) / 5;
    (seen[r.class_index]++ < n_train ? train : test).records.push_back(r);
  }
  return {std::move(train), std::move(test)};
}

ScenarioData load_scenario_data(const Manifest& manifest, std::uint64_t seed) {
  ScenarioData data;
  data.text = read_embedding_file(manifest.text_embeddings);
  if (manifest.image_embeddings.size() == 1) {
    std::tie(data.train, data.test) = split_train_test(read_embedding_file(manifest.image_embeddings[0]));
  } else if (manifest.image_embeddings.size() == 2) {
    data.train = read_embedding_file(manifest.image_embeddings[0]);
    data.test = read_embedding_file(manifest.image_embeddings[1]);
  } else {
    throw ConfigError("manifest: image_embeddings must list one file or [train, test]");
  }
  for (const auto* set : {&data.train, &data.test}) {
    if (set->class_names != data.text.class_names || set->dim != data.text.dim) {
      throw ConfigError("image and text containers disagree on class table or dimension");
    }
  }
  data.tasks = split_tasks(manifest.split, manifest.num_tasks,
                           resolve_class_order(manifest.class_order, data.text.num_classes(), seed));
  return data;
}

EvalResult evaluate(const AdapterParams& params, const Batch& test, const DenseMatrix& text,
                    const LogitConfig& cfg) {
  EvalResult r;
  r.per_class_correct.assign(text.rows(), 0);
  r.per_class_total.assign(text.rows(), 0);
  const DenseMatrix prepared = prepare_text(text, cfg);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::size_t y = test.labels[i];
    if (y >= text.rows()) throw ContractViolation("evaluate: label out of range");
    const std::size_t pred = argmax(logits_prepared(forward(params, test.inputs[i]), prepared, cfg));
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

EvalResult evaluate(const AdapterParams& params, const EmbeddingSet& test, const EmbeddingSet& text,
                    const LogitConfig& cfg) {
  Batch b;
  for (const auto& r : test.records) {
    b.inputs.push_back(r.vector);
    b.labels.push_back(r.class_index);
  }
  return evaluate(params, b, text_matrix(text), cfg);
}

AdapterParams train_adapter(AdapterParams params, const Batch& train, const DenseMatrix& text,
                            const TrainOptions& options, const DistillationTerm* distill,
                            const StepObserver& observer) {
  const std::size_t n = train.size();
  if (n == 0 || options.epochs == 0 || params.parameter_count() == 0) return params;
  if (options.batch_size == 0) throw ContractViolation("train_adapter: batch_size must be >= 1");
  if (distill && !distill->apply_to.empty() && distill->apply_to.size() != n) {
    throw ContractViolation("train_adapter: distillation mask length != training set size");
  }
  const std::size_t per_epoch = (n + options.batch_size - 1) / options.batch_size;
  const CosineSchedule schedule{options.optimizer.lr, options.epochs * per_epoch};
  Optimizer optimizer(options.optimizer, params.parameter_count());
  FlatParamView flat = flatten(params);

  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(options.shuffle_seed, "epoch", epoch));
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t stop = std::min(n, start + options.batch_size);
      Batch mb;
      DistillationTerm local;
      if (distill) {
        local = *distill;
        local.apply_to.clear();
      }
      for (std::size_t k = start; k < stop; ++k) {
        mb.inputs.push_back(train.inputs[order[k]]);
        mb.labels.push_back(train.labels[order[k]]);
        if (distill && !distill->apply_to.empty()) local.apply_to.push_back(distill->apply_to[order[k]]);
      }
      const auto lg = adapter_loss_and_grad(params, mb, text, options.logits, distill ? &local : nullptr);
      optimizer.step(flat.values, lg.grad.values, schedule.lr_at(step));
      params = unflatten(flat, params.kind, params.dim, params.attention_mode);
      if (observer) observer(step, params, lg.grad);
      ++step;
    }
  }
  return params;
}

namespace {

struct TaskSplit {
  EmbeddingSet train;  // labels remapped to seen-order indices
  Batch test;
};

DenseMatrix first_rows(const DenseMatrix& m, std::size_t rows) {
  return DenseMatrix(rows, m.cols(),
                     std::vector<double>(m.values().begin(),
                                         m.values().begin() + static_cast<std::ptrdiff_t>(rows * m.cols())));
}

void check_data(const ScenarioData& data) {
  if (!data.text.is_text_set()) throw ConfigError("text set must hold exactly one vector per class");
  const std::size_t k = data.text.num_classes();
  if (data.train.dim != data.text.dim || data.test.dim != data.text.dim) {
    throw ConfigError("image and text embeddings differ in dimension");
  }
  if (data.train.num_classes() != k || data.test.num_classes() != k) {
    throw ConfigError("image and text containers differ in class count");
  }
  if (data.tasks.empty()) throw ConfigError("scenario needs at least one task");
  std::vector<bool> used(k, false);
  for (const auto& task : data.tasks) {
    if (task.empty()) throw ConfigError("scenario task with no classes");
    for (const auto c : task) {
      if (c >= k || used[c]) throw ConfigError("tasks must hold distinct valid class indices");
      used[c] = true;
    }
  }
}

}  // namespace

RunResult run(const ScenarioConfig& config, const ScenarioData& data, std::uint64_t seed) {
  config.validate();
  check_data(data);
  const std::size_t dim = data.text.dim;
  const std::size_t num_tasks = data.tasks.size();

  // Labels are positions in the concatenated task order, so the text rows of
  // the classes seen up to task t are the first K_{1:t} rows.
  std::vector<std::size_t> label_of(data.text.num_classes(), SIZE_MAX);
  std::vector<std::size_t> task_of(data.text.num_classes(), SIZE_MAX);
  std::vector<std::string> seen_names;
  std::size_t next = 0;
  for (std::size_t t = 0; t < num_tasks; ++t) {
    for (const auto c : data.tasks[t]) {
      label_of[c] = next++;
      task_of[c] = t;
      seen_names.push_back(data.text.class_names[c]);
    }
  }
  const DenseMatrix raw_text = text_matrix(data.text);
  DenseMatrix text_all(next, dim);
  for (std::size_t c = 0; c < label_of.size(); ++c) {
    if (label_of[c] == SIZE_MAX) continue;
    std::copy(raw_text.row(c).begin(), raw_text.row(c).end(), text_all.row(label_of[c]).begin());
  }

  std::vector<TaskSplit> splits(num_tasks);
  for (auto& s : splits) s.train = EmbeddingSet{dim, seen_names, {}};
  for (const auto& r : data.train.records) {
    if (task_of[r.class_index] == SIZE_MAX) continue;
    splits[task_of[r.class_index]].train.records.push_back(
        {static_cast<std::uint32_t>(label_of[r.class_index]), r.vector});
  }
  for (const auto& r : data.test.records) {
    if (task_of[r.class_index] == SIZE_MAX) continue;
    auto& b = splits[task_of[r.class_index]].test;
    b.inputs.push_back(r.vector);
    b.labels.push_back(label_of[r.class_index]);
  }

  RunResult result;
  result.config = config;
  result.seed = seed;
  result.tasks = data.tasks;
  for (const auto& s : splits) result.accuracy.test_sizes.push_back(s.test.size());

  const bool trains = config.method != Method::zero_shot;
  AdapterParams params = trains && config.method != Method::linear_probe
                             ? init_adapter(config.adapter, dim, derive_seed(seed, "adapter"),
                                            config.init, config.attention_mode)
                             : AdapterParams{AdapterKind::identity, config.attention_mode, dim, {}};
  ProbeHead head{DenseMatrix(0, dim), DenseVector(0)};
  ExemplarBuffer buffer(config.exemplar_budget, derive_seed(seed, "exemplars"));

  std::size_t seen = 0;
  for (std::size_t t = 0; t < num_tasks; ++t) {
    const auto started = std::chrono::steady_clock::now();
    const std::size_t seen_before = seen;
    seen += data.tasks[t].size();
    const DenseMatrix text_seen = first_rows(text_all, seen);

    if (trains) {
      Batch train;
      std::vector<bool> is_current;
      for (const auto& r : splits[t].train.records) {
        train.inputs.push_back(r.vector);
        train.labels.push_back(r.class_index);
        is_current.push_back(true);
      }
      for (const auto& e : buffer.entries()) {
        train.inputs.push_back(e.vector);
        train.labels.push_back(e.label);
        is_current.push_back(false);
      }
      const TrainOptions options{config.optimizer, config.epochs, config.batch_size, config.logits,
                                 derive_seed(seed, "shuffle", t)};

      switch (config.method) {
        case Method::linear_probe:
          head = expand_head(head, dim, data.tasks[t].size(), derive_seed(seed, "probe_head", t));
          head = train_probe(std::move(head), train, options);
          break;
        case Method::adapter_plain:
          params = train_adapter(std::move(params), train, text_seen, options);
          break;
        case Method::adapter_kd: {
          const AdapterParams previous = params;
          if (t > 0 && config.kd.weight > 0.0) {
            const DistillationTerm distill{&previous, seen_before, config.kd.temperature,
                                           config.kd.weight, is_current};
            params = train_adapter(std::move(params), train, text_seen, options, &distill);
          } else {
            params = train_adapter(std::move(params), train, text_seen, options);
          }
          break;
        }
        case Method::adapter_retention: {
          const AdapterParams previous = params;
          params = train_adapter(std::move(params), train, text_seen, options);
          if (t > 0) {
            RetentionConfig rc = config.retention;
            rc.rng_seed = derive_seed(derive_seed(seed, "retention", t), "user", config.retention.rng_seed);
            params = merge(previous, params, rc);
          }
          break;
        }
        case Method::zero_shot:
          break;
      }

      std::vector<std::size_t> new_labels(data.tasks[t].size());
      std::iota(new_labels.begin(), new_labels.end(), seen_before);
      if (config.exemplar_budget > 0) buffer.rebalance_and_add(splits[t].train, new_labels);
    }

    std::size_t correct = 0;
    std::size_t total = 0;
    std::vector<double> row;
    std::vector<std::size_t> preds;
    for (std::size_t j = 0; j <= t; ++j) {
      const EvalResult e = config.method == Method::linear_probe
                               ? evaluate_probe(head, splits[j].test)
                               : evaluate(params, splits[j].test, text_seen, config.logits);
      row.push_back(e.accuracy);
      correct += e.correct;
      total += e.total;
      preds.insert(preds.end(), e.predictions.begin(), e.predictions.end());
    }
    result.accuracy.per_task.push_back(std::move(row));
    result.accuracy.overall.push_back(total == 0 ? 0.0
                                                 : static_cast<double>(correct) / static_cast<double>(total));
    result.predictions.push_back(std::move(preds));
    result.evaluated_params.push_back(config.method == Method::linear_probe ? flatten(head)
                                                                            : flatten(params));
    result.seconds_per_task.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
  }

  double sum = 0.0;
  for (const double x : result.accuracy.overall) sum += x;
  result.avg = sum / static_cast<double>(num_tasks);
  result.last = result.accuracy.overall.back();
  if (trains && config.method != Method::linear_probe) result.final_adapter = std::move(params);
  return result;
}

RunResult run(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.manifest_path.empty()) throw ConfigError("manifest path is not set");
  return run(config, load_scenario_data(read_manifest(config.manifest_path), seed), seed);
}

std::vector<RunResult> run_all(const ScenarioConfig& config, unsigned jobs) {
  config.validate();
  const auto manifest = read_manifest(config.manifest_path);
  std::vector<RunResult> results(config.seeds.size());
  const std::size_t width = std::max(1u, jobs);
  for (std::size_t start = 0; start < config.seeds.size(); start += width) {
    std::vector<std::future<RunResult>> pending;
    const std::size_t stop = std::min(config.seeds.size(), start + width);
    for (std::size_t i = start; i < stop; ++i) {
      pending.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred,
                                   [&config, &manifest, seed = config.seeds[i]] {
                                     return run(config, load_scenario_data(manifest, seed), seed);
                                   }));
    }
    for (std::size_t i = start; i < stop; ++i) results[i] = pending[i - start].get();
  }
  return results;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("summarize: no values");
  MetricSummary s;
  for (const double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

Aggregate aggregate(std::span<const RunResult> results) {
  if (results.empty()) throw ContractViolation("aggregate: no results");
  std::vector<double> avgs;
  std::vector<double> lasts;
  for (const auto& r : results) {
    if (!r.config.same_experiment(results.front().config)) {
      throw ContractViolation("aggregate: runs come from different configurations");
    }
    avgs.push_back(r.avg);
    lasts.push_back(r.last);
  }
  return {results.size(), summarize(avgs), summarize(lasts)};
}

}  // namespace cladapt
