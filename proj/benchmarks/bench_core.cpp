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

#include <benchmark/benchmark.h>

#include <tuple>

#include "cladapt/objective.hpp"
#include "cladapt/retention.hpp"
#include "cladapt/rng.hpp"
#include "cladapt/scenario.hpp"
#include "cladapt/synthgen.hpp"

namespace {

using namespace cladapt;

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix m(rows, cols);
  for (double& x : m.span()) x = rng.normal();
  return m;
}

Batch gaussian_batch(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    DenseVector x(dim);
    for (double& v : x) v = rng.normal();
    b.inputs.push_back(std::move(x));
    b.labels.push_back(static_cast<std::size_t>(rng.below(classes)));
  }
  return b;
}

void BM_Matvec(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto w = gaussian_matrix(m, m, 1);
  DenseVector x(m, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(matvec(w, x));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * m));
}
BENCHMARK(BM_Matvec)->Arg(32)->Arg(512)->Arg(768);

void BM_CeGrad(benchmark::State& state) {
  const auto kind = static_cast<AdapterKind>(state.range(0));
  const std::size_t m = 64;
  const auto params = init_adapter(kind, m, 2);
  const auto batch = gaussian_batch(128, m, 100, 3);
  const auto text = gaussian_matrix(100, m, 4);
  for (auto _ : state) benchmark::DoNotOptimize(ce_grad(params, batch, text, {}));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_CeGrad)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_Merge(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto prev = flatten(init_adapter(AdapterKind::linear, m, 5));
  const auto cur = flatten(init_adapter(AdapterKind::linear, m, 6, {InitScheme::gaussian}));
  for (auto _ : state) benchmark::DoNotOptimize(merge(prev, cur, {0.8}));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * prev.size()));
}
BENCHMARK(BM_Merge)->Arg(32)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_TrainTask(benchmark::State& state) {
  SynthConfig sc;
  sc.classes = 20;
  sc.delta = 0.6;
  sc.sigma = 0.1;
  sc.per_task_distortion = true;
  const auto synth = generate(sc);
  ScenarioData data;
  std::tie(data.train, data.test) = split_train_test(synth.images);
  data.text = synth.text;
  data.tasks = synth.tasks;
  ScenarioConfig cfg;
  cfg.exemplar_budget = 200;
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg, data, 1).last);
  state.SetLabel("M=32 K=20 T=5, 30 epochs/task");
}
BENCHMARK(BM_TrainTask)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
