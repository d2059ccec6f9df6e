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

#include "cladapt/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "cladapt/errors.hpp"
#include "cladapt/rng.hpp"

namespace cladapt {

void SynthConfig::validate() const {
  if (dim < 2) throw ConfigError("synth: dim must be >= 2");
  if (classes < 2) throw ConfigError("synth: classes must be >= 2");
  if (per_class < 2) throw ConfigError("synth: per_class must be >= 2");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("synth: delta must lie in [0, 1]");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("synth: sigma must be >= 0");
  if (num_tasks < 1) throw ConfigError("synth: num_tasks must be >= 1");
}

DenseMatrix random_rotation(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  // Columns of `q` are orthonormalized in place.
  std::vector<std::vector<double>> cols(dim, std::vector<double>(dim));
  for (auto& c : cols) {
    for (double& x : c) x = rng.normal();
  }
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      const double proj = dot(cols[k], cols[j]);
      for (std::size_t i = 0; i < dim; ++i) cols[j][i] -= proj * cols[k][i];
    }
    const double n = l2_norm(cols[j]);
    if (!(n > kNormEpsilon)) throw DegenerateInput("random_rotation: rank-deficient draw");
    for (double& x : cols[j]) x /= n;
  }
  DenseMatrix q(dim, dim);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < dim; ++i) q(i, j) = cols[j][i];
  }
  return q;
}

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthData out;
  out.class_order = resolve_class_order(std::nullopt, cfg.classes, cfg.seed);
  out.tasks = split_tasks(cfg.split, cfg.num_tasks, out.class_order);

  std::vector<std::string> names;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "class_%03zu", c);
    names.emplace_back(buf);
  }
  out.images.dim = out.text.dim = cfg.dim;
  out.images.class_names = out.text.class_names = names;

  Rng proto_rng(derive_seed(cfg.seed, "prototypes"));
  std::vector<DenseVector> prototypes;
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    DenseVector g(cfg.dim);
    for (double& x : g) x = proto_rng.normal();
    prototypes.push_back(l2_normalize(g));
    out.text.records.push_back({static_cast<std::uint32_t>(c), prototypes.back()});
  }

  std::vector<std::size_t> task_of(cfg.classes, 0);
  for (std::size_t t = 0; t < out.tasks.size(); ++t) {
    for (const auto c : out.tasks[t]) task_of[c] = t;
  }
  const std::size_t rotations = cfg.per_task_distortion ? out.tasks.size() : 1;
  std::vector<DenseMatrix> rot;
  for (std::size_t t = 0; t < rotations; ++t) {
    rot.push_back(random_rotation(cfg.dim, derive_seed(cfg.seed, "rotation", t)));
  }

  for (std::size_t c = 0; c < cfg.classes; ++c) {
    const auto& p = prototypes[c];
    const auto rp = matvec(rot[cfg.per_task_distortion ? task_of[c] : 0], p);
    Rng noise(derive_seed(cfg.seed, "noise", c));
    for (std::size_t n = 0; n < cfg.per_class; ++n) {
      DenseVector v(cfg.dim);
      for (std::size_t i = 0; i < cfg.dim; ++i) {
        v[i] = (1.0 - cfg.delta) * p[i] + cfg.delta * rp[i] + cfg.sigma * noise.normal();
      }
      out.images.records.push_back({static_cast<std::uint32_t>(c), l2_normalize(v)});
    }
  }
  return out;
}

SynthFiles write_synthetic(const SynthData& data, const SynthConfig& cfg,
                           const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  SynthFiles files{out_dir / "images.cem", out_dir / "text.cem", out_dir / "manifest.json"};
  write_embedding_file(data.images, files.images);
  write_embedding_file(data.text, files.text);
  Manifest m;
  m.image_embeddings = {"images.cem"};
  m.text_embeddings = "text.cem";
  m.split = cfg.split;
  m.num_tasks = cfg.num_tasks;
  m.seed = cfg.seed;
  m.class_order = data.class_order;
  write_manifest(m, files.manifest);
  return files;
}

}  // namespace cladapt
