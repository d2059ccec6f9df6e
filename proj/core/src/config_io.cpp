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

#include "cladapt/config_io.hpp"

#include <set>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "cladapt/errors.hpp"

namespace cladapt {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

/// Reads one JSON object, rejecting unknown keys and reporting the full field
/// path on any type error.
class Fields {
 public:
  Fields(const json& obj, std::string path, std::set<std::string> allowed) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("", "expected an object");
    for (const auto& [key, _] : obj_.items()) {
      if (!allowed.contains(key)) fail(key, "unknown key");
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json& at(const std::string& key) const {
    if (!has(key)) fail(key, "required key is missing");
    return obj_.at(key);
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(key, "expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  std::uint64_t seed(const json& v, const std::string& key) const {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(key, "expected a non-negative integer seed");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const auto& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  template <typename Parse>
  auto enumeration(const std::string& key, Parse parse, decltype(parse("")) fallback) const {
    if (!has(key)) return fallback;
    try {
      return parse(string(key));
    } catch (const ConfigError& e) {
      fail(key, e.what());
    }
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (path_.empty() ? "config" : path_) : child(key);
    throw ConfigError(where + ": " + what);
  }

 private:
  const json& obj_;
  std::string path_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

CliConfig parse_cli_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  const Fields root(doc, "",
                    {"manifest", "method", "adapter", "retention", "optimizer", "epochs", "batch_size",
                     "exemplars", "logits", "kd", "seeds", "output"});
  CliConfig cfg;
  ScenarioConfig& sc = cfg.scenario;
  sc.method = root.enumeration("method", parse_method, Method::adapter_retention);
  if (!root.has("method")) root.fail("method", "required key is missing");
  sc.manifest_path = resolve(base_dir, root.string("manifest"));

  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (root.has(k)) {
        root.fail(k, std::string("not allowed for method ") + std::string(to_string(sc.method)));
      }
    }
  };
  switch (sc.method) {
    case Method::zero_shot:
      forbid({"adapter", "optimizer", "epochs", "batch_size", "exemplars", "retention", "kd"});
      break;
    case Method::linear_probe: forbid({"adapter", "retention", "kd"}); break;
    case Method::adapter_retention: forbid({"kd"}); break;
    case Method::adapter_kd: forbid({"retention"}); break;
    case Method::adapter_plain: forbid({"retention", "kd"}); break;
  }

  if (root.has("adapter")) {
    const Fields f(root.at("adapter"), "adapter", {"kind", "attention_mode", "init", "init_epsilon"});
    sc.adapter = f.enumeration("kind", parse_adapter_kind, sc.adapter);
    sc.attention_mode = f.enumeration("attention_mode", parse_attention_mode, sc.attention_mode);
    sc.init.scheme = f.enumeration("init", parse_init_scheme, sc.init.scheme);
    sc.init.epsilon = f.number("init_epsilon", sc.init.epsilon);
  }
  if (root.has("retention")) {
    const Fields f(root.at("retention"), "retention", {"gamma", "strategy", "granularity", "seed"});
    sc.retention.gamma = f.number("gamma", sc.retention.gamma);
    sc.retention.strategy = f.enumeration("strategy", parse_retention_strategy, sc.retention.strategy);
    sc.retention.granularity =
        f.enumeration("granularity", parse_retention_granularity, sc.retention.granularity);
    if (f.has("seed")) sc.retention.rng_seed = f.seed(f.at("seed"), "seed");
  }
  if (root.has("optimizer")) {
    const Fields f(root.at("optimizer"), "optimizer",
                   {"kind", "lr", "weight_decay", "momentum", "beta1", "beta2", "epsilon"});
    sc.optimizer.kind = f.enumeration("kind", parse_optimizer_kind, sc.optimizer.kind);
    if (sc.optimizer.kind == OptimizerKind::adam) {
      // Adam defaults differ from sgd: lr 0.01, no weight decay.
      sc.optimizer.lr = 0.01;
      sc.optimizer.weight_decay = 0.0;
    }
    sc.optimizer.lr = f.number("lr", sc.optimizer.lr);
    sc.optimizer.weight_decay = f.number("weight_decay", sc.optimizer.weight_decay);
    sc.optimizer.momentum = f.number("momentum", sc.optimizer.momentum);
    sc.optimizer.beta1 = f.number("beta1", sc.optimizer.beta1);
    sc.optimizer.beta2 = f.number("beta2", sc.optimizer.beta2);
    sc.optimizer.epsilon = f.number("epsilon", sc.optimizer.epsilon);
  }
  sc.epochs = root.count("epochs", sc.epochs);
  sc.batch_size = root.count("batch_size", sc.batch_size);
  sc.exemplar_budget = root.count("exemplars", sc.exemplar_budget);
  if (root.has("logits")) {
    const Fields f(root.at("logits"), "logits", {"normalize", "scale"});
    sc.logits.normalize = f.boolean("normalize", sc.logits.normalize);
    sc.logits.logit_scale = f.number("scale", sc.logits.logit_scale);
  }
  if (root.has("kd")) {
    const Fields f(root.at("kd"), "kd", {"temperature", "weight"});
    sc.kd.temperature = f.number("temperature", sc.kd.temperature);
    sc.kd.weight = f.number("weight", sc.kd.weight);
  }
  if (root.has("seeds")) {
    const auto& seeds = root.at("seeds");
    if (!seeds.is_array() || seeds.empty()) root.fail("seeds", "expected a non-empty array");
    sc.seeds.clear();
    for (const auto& s : seeds) sc.seeds.push_back(root.seed(s, "seeds"));
  }
  if (root.has("output")) {
    const Fields f(root.at("output"), "output", {"dir", "save_checkpoints"});
    cfg.output.dir = resolve(base_dir, f.string("dir", cfg.output.dir.string()));
    cfg.output.save_checkpoints = f.boolean("save_checkpoints", false);
  } else {
    cfg.output.dir = resolve(base_dir, cfg.output.dir.string());
  }
  sc.validate();
  return cfg;
}

CliConfig read_cli_config(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return parse_cli_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                          path.parent_path());
}

namespace {

ojson config_echo(const ScenarioConfig& c) {
  ojson j;
  j["manifest"] = c.manifest_path.generic_string();
  j["method"] = to_string(c.method);
  const bool adapter_method = c.method == Method::adapter_retention || c.method == Method::adapter_plain ||
                              c.method == Method::adapter_kd;
  if (adapter_method) {
    j["adapter"] = {{"kind", to_string(c.adapter)},
                    {"attention_mode", to_string(c.attention_mode)},
                    {"init", to_string(c.init.scheme)},
                    {"init_epsilon", c.init.epsilon}};
  }
  if (c.method == Method::adapter_retention) {
    j["retention"] = {{"gamma", c.retention.gamma},
                      {"strategy", to_string(c.retention.strategy)},
                      {"granularity", to_string(c.retention.granularity)},
                      {"seed", c.retention.rng_seed}};
  }
  if (c.method != Method::zero_shot) {
    j["optimizer"] = {{"kind", to_string(c.optimizer.kind)}, {"lr", c.optimizer.lr},
                      {"weight_decay", c.optimizer.weight_decay}, {"momentum", c.optimizer.momentum},
                      {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2},
                      {"epsilon", c.optimizer.epsilon}};
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["exemplars"] = c.exemplar_budget;
  }
  j["logits"] = {{"normalize", c.logits.normalize}, {"scale", c.logits.logit_scale}};
  if (c.method == Method::adapter_kd) {
    j["kd"] = {{"temperature", c.kd.temperature}, {"weight", c.kd.weight}};
  }
  j["seeds"] = c.seeds;
  return j;
}

}  // namespace

std::string config_to_json(const ScenarioConfig& config) { return config_echo(config).dump(2) + "\n"; }

std::string result_to_json(const RunResult& r) {
  ojson j;
  j["config"] = config_echo(r.config);
  j["seed"] = r.seed;
  j["tasks"] = r.tasks;
  j["accuracy"] = {{"overall", r.accuracy.overall},
                   {"per_task", r.accuracy.per_task},
                   {"test_sizes", r.accuracy.test_sizes}};
  j["avg"] = r.avg;
  j["last"] = r.last;
  return j.dump(2) + "\n";
}

RunResult result_from_json(std::string_view json_text) {
  try {
    const auto j = json::parse(json_text);
    RunResult r;
    r.config = parse_cli_config(j.at("config").dump()).scenario;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tasks = j.at("tasks").get<std::vector<std::vector<std::size_t>>>();
    const auto& acc = j.at("accuracy");
    r.accuracy.overall = acc.at("overall").get<std::vector<double>>();
    r.accuracy.per_task = acc.at("per_task").get<std::vector<std::vector<double>>>();
    r.accuracy.test_sizes = acc.at("test_sizes").get<std::vector<std::size_t>>();
    r.avg = j.at("avg").get<double>();
    r.last = j.at("last").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("result: ") + e.what());
  }
}

std::string results_to_csv(std::span<const RunResult> results) {
  std::ostringstream out;
  out.precision(17);
  out << "seed,task,overall,avg_so_far\n";
  for (const auto& r : results) {
    double sum = 0.0;
    for (std::size_t t = 0; t < r.accuracy.overall.size(); ++t) {
      sum += r.accuracy.overall[t];
      out << r.seed << ',' << (t + 1) << ',' << r.accuracy.overall[t] << ','
          << sum / static_cast<double>(t + 1) << '\n';
    }
  }
  return out.str();
}

std::string timings_to_json(std::span<const RunResult> results) {
  ojson j = ojson::array();
  for (const auto& r : results) j.push_back({{"seed", r.seed}, {"seconds_per_task", r.seconds_per_task}});
  return j.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  detail::write_file_atomic(path, text);
}

}  // namespace cladapt
