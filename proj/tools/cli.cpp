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

#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "cladapt/adapters.hpp"
#include "cladapt/config_io.hpp"
#include "cladapt/embedding_store.hpp"
#include "cladapt/errors.hpp"
#include "cladapt/scenario.hpp"
#include "cladapt/synthgen.hpp"

namespace cladapt::cli {
namespace {

/// Raised for bad flag values detected after CLI11 parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string percent(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%6.2f ± %5.2f", 100.0 * mean, 100.0 * sd);
  return buf;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t u32_at(const std::vector<std::uint8_t>& b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 | static_cast<std::uint32_t>(b[off + 3]) << 24;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  SynthConfig synth;
  std::string split = "b0";
  std::filesystem::path out = "synthetic";
};

void add_gen(CLI::App& app, GenArgs& a) {
  app.add_option("--dim", a.synth.dim, "embedding dimension M")->capture_default_str();
  app.add_option("--classes", a.synth.classes, "number of classes K")->capture_default_str();
  app.add_option("--per-class", a.synth.per_class, "images per class")->capture_default_str();
  app.add_option("--delta", a.synth.delta, "image/text mismatch in [0, 1]")->capture_default_str();
  app.add_option("--sigma", a.synth.sigma, "image noise level")->capture_default_str();
  app.add_flag("--per-task-distortion", a.synth.per_task_distortion,
               "draw a separate distortion per task");
  app.add_option("--seed", a.synth.seed, "generator seed")->capture_default_str();
  app.add_option("--tasks", a.synth.num_tasks, "number of tasks written to the manifest")
      ->capture_default_str();
  app.add_option("--split", a.split, "task split: b0 or b50")->capture_default_str();
  app.add_option("--out", a.out, "output directory")->capture_default_str();
}

int cmd_gen(GenArgs& a, std::ostream& out) {
  try {
    a.synth.split = parse_split(a.split);
    a.synth.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  SynthData data;
  try {
    data = generate(a.synth);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const auto files = write_synthetic(data, a.synth, a.out);
  out << "images   " << files.images.string() << "  (N=" << data.images.records.size()
      << ", K=" << data.images.num_classes() << ", M=" << data.images.dim << ")\n";
  out << "text     " << files.text.string() << "  (N=" << data.text.records.size() << ")\n";
  out << "manifest " << files.manifest.string() << "  (" << data.tasks.size() << " tasks, "
      << to_string(a.synth.split) << ")\n";
  return kExitOk;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::filesystem::path config;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out;
  unsigned jobs = 1;
};

void add_run(CLI::App& app, RunArgs& a) {
  app.add_option("--config", a.config, "experiment config (JSON)")->required();
  app.add_option("--seeds", a.seeds, "comma-separated seeds; overrides the config")->delimiter(',');
  app.add_option("--out", a.out, "output directory; overrides the config");
  app.add_option("--jobs", a.jobs, "seeds run concurrently")->capture_default_str();
}

int cmd_run(const RunArgs& a, std::ostream& out) {
  CliConfig cfg;
  try {
    cfg = read_cli_config(a.config);
    if (!a.seeds.empty()) cfg.scenario.seeds = a.seeds;
    if (!a.out.empty()) cfg.output.dir = a.out;
    cfg.scenario.validate();
    read_manifest(cfg.scenario.manifest_path);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  if (a.jobs == 0) throw UsageError("--jobs must be >= 1");

  const auto results = run_all(cfg.scenario, a.jobs);

  std::error_code ec;
  std::filesystem::create_directories(cfg.output.dir, ec);
  if (ec) throw IoError("cannot create " + cfg.output.dir.string() + ": " + ec.message());
  const std::string stem(to_string(cfg.scenario.method));
  for (const auto& r : results) {
    const auto base = cfg.output.dir / (stem + "_seed" + std::to_string(r.seed));
    write_text_file(base.string() + ".json", result_to_json(r));
    if (cfg.output.save_checkpoints && r.final_adapter) {
      write_checkpoint(*r.final_adapter, base.string() + ".cadp");
    }
  }
  write_text_file(cfg.output.dir / (stem + "_aggregate.csv"), results_to_csv(results));
  write_text_file(cfg.output.dir / (stem + "_timing.json"), timings_to_json(results));

  const auto agg = aggregate(results);
  out << "method              n   Avg (%)          Last (%)\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %2zu   %s   %s\n", stem.c_str(), agg.runs,
                percent(agg.avg.mean, agg.avg.stddev).c_str(),
                percent(agg.last.mean, agg.last.stddev).c_str());
  out << line << "results in " << cfg.output.dir.string() << "\n";
  return kExitOk;
}

// ---- inspect ---------------------------------------------------------------

int cmd_inspect(const std::filesystem::path& path, std::ostream& out) {
  const auto bytes = slurp(path);
  if (bytes.size() < 4) throw FormatError("magic", 0, "file shorter than the magic number");
  const std::string magic(bytes.begin(), bytes.begin() + 4);
  if (magic == "CEM1") {
    const auto set = decode_embedding_set(bytes);
    out << "file     " << path.string() << "\n"
        << "format   CEM1 embedding container\n"
        << "version  " << u32_at(bytes, 4) << "\n"
        << "M        " << set.dim << "\n"
        << "K        " << set.num_classes() << "\n"
        << "N        " << set.records.size() << "\n";
    if (set.is_text_set()) out << "kind     text (N == K)\n";
    out << "classes ";
    for (const auto& n : set.class_names) out << ' ' << n;
    out << "\n";
    return kExitOk;
  }
  if (magic == "CADP") {
    const auto p = decode_checkpoint(bytes);
    out << "file     " << path.string() << "\n"
        << "format   CADP adapter checkpoint\n"
        << "version  " << u32_at(bytes, 4) << "\n"
        << "adapter  " << to_string(p.kind) << "\n";
    if (p.kind == AdapterKind::self_attention) out << "mode     " << to_string(p.attention_mode) << "\n";
    out << "M        " << p.dim << "\n"
        << "params   " << p.parameter_count() << "\n";
    return kExitOk;
  }
  throw FormatError("magic", 0, "unrecognized magic \"" + magic + "\"");
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  bool raw_logits = false;
  double scale = 100.0;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  app.add_option("--checkpoint", a.checkpoint, "adapter checkpoint (.cadp)")->required();
  app.add_option("--manifest", a.manifest, "dataset manifest")->required();
  app.add_flag("--raw-logits", a.raw_logits, "use raw inner products instead of scaled cosine");
  app.add_option("--scale", a.scale, "logit scale for cosine logits")->capture_default_str();
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  Manifest manifest;
  try {
    manifest = read_manifest(a.manifest);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const auto params = read_checkpoint(a.checkpoint);
  const auto data = load_scenario_data(manifest, manifest.seed);
  if (params.dim != data.text.dim) {
    throw UsageError("checkpoint dimension " + std::to_string(params.dim) + " != dataset dimension " +
                     std::to_string(data.text.dim));
  }
  const LogitConfig logits{!a.raw_logits, a.scale};
  const auto r = evaluate(params, data.test, data.text, logits);
  char line[128];
  std::snprintf(line, sizeof line, "accuracy %.4f  (%zu / %zu test samples, %zu classes)\n", r.accuracy,
                r.correct, r.total, data.text.num_classes());
  out << line;
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Class-incremental adapters over frozen embeddings", "cladapt"};
  app.require_subcommand(1);

  GenArgs gen_args;
  RunArgs run_args;
  EvalArgs eval_args;
  std::filesystem::path inspect_path;

  auto* gen = app.add_subcommand("gen", "generate a synthetic embedding dataset");
  add_gen(*gen, gen_args);
  auto* run = app.add_subcommand("run", "run an experiment config over one or more seeds");
  add_run(*run, run_args);
  auto* inspect = app.add_subcommand("inspect", "print the header of a .cem or .cadp file");
  inspect->add_option("path", inspect_path, "file to inspect")->required();
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset's test split");
  add_eval(*eval, eval_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(gen_args, out);
    if (*run) return cmd_run(run_args, out);
    if (*inspect) return cmd_inspect(inspect_path, out);
    if (*eval) return cmd_eval(eval_args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace cladapt::cli
