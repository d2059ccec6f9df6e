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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "cladapt/scenario.hpp"

namespace cladapt {

struct OutputSettings {
  std::filesystem::path dir = "results";
  bool save_checkpoints = false;
};

/// A run configuration file: the experiment plus where to write results.
struct CliConfig {
  ScenarioConfig scenario;
  OutputSettings output;
};

/// Strict parse: unknown keys, wrong types and method-inconsistent sections
/// raise ConfigError naming the offending field path (e.g. "optimizer.lr").
/// Relative paths resolve against `base_dir`.
CliConfig parse_cli_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
CliConfig read_cli_config(const std::filesystem::path& path);

/// Canonical JSON echo of the experiment. Only sections relevant to the
/// method are emitted, so the echo parses back as a config file.
std::string config_to_json(const ScenarioConfig& config);

/// Per-seed result document: config echo, seed, task layout, accuracy matrix,
/// Avg and Last. Wall-clock timings are deliberately excluded so identical
/// runs serialize to identical bytes.
std::string result_to_json(const RunResult& result);
RunResult result_from_json(std::string_view json_text);

/// One row per task per seed: seed,task,overall,avg_so_far.
std::string results_to_csv(std::span<const RunResult> results);

/// Per-seed wall-clock seconds for each task.
std::string timings_to_json(std::span<const RunResult> results);

/// Writes `text` to a temporary sibling and renames it over `path`.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cladapt
