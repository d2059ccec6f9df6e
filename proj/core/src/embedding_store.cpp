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

#include "cladapt/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>

#include <json.hpp>

#include "binary_io.hpp"
#include "cladapt/errors.hpp"
#include "cladapt/rng.hpp"

namespace cladapt {

using nlohmann::json;

void EmbeddingSet::validate() const {
  std::set<std::string_view> seen;
  for (const auto& name : class_names) {
    if (!seen.insert(name).second) throw ContractViolation("duplicate class name '" + name + "'");
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.class_index >= class_names.size()) {
      throw ContractViolation("record " + std::to_string(i) + ": class index " +
                              std::to_string(r.class_index) + " out of range");
    }
    if (r.vector.dim() != dim) {
      throw ContractViolation("record " + std::to_string(i) + ": dim " +
                              std::to_string(r.vector.dim()) + " != " + std::to_string(dim));
    }
    if (!all_finite(r.vector.span())) {
      throw ContractViolation("record " + std::to_string(i) + ": non-finite entry");
    }
  }
}

bool EmbeddingSet::is_text_set() const {
  if (records.size() != class_names.size()) return false;
  std::vector<bool> hit(class_names.size(), false);
  for (const auto& r : records) {
    if (r.class_index >= hit.size() || hit[r.class_index]) return false;
    hit[r.class_index] = true;
  }
  return true;
}

DenseMatrix text_matrix(const EmbeddingSet& text) {
  if (!text.is_text_set()) {
    throw ContractViolation("text embedding set must hold exactly one record per class");
  }
  DenseMatrix m(text.num_classes(), text.dim);
  for (const auto& r : text.records) {
    std::copy(r.vector.begin(), r.vector.end(), m.row(r.class_index).begin());
  }
  return m;
}

std::size_t embedding_file_size(const EmbeddingSet& set) {
  std::size_t n = kEmbeddingHeaderBytes;
  for (const auto& name : set.class_names) n += 2 + name.size();
  n += set.records.size() * (4 + 4 * set.dim);
  return n;
}

std::vector<std::uint8_t> encode_embedding_set(const EmbeddingSet& set) {
  set.validate();
  for (const auto& r : set.records) {
    for (const double x : r.vector) {
      if (!std::isfinite(static_cast<float>(x))) {
        throw ContractViolation("value " + std::to_string(x) + " overflows 32-bit storage");
      }
    }
  }
  detail::ByteWriter w;
  w.raw(std::string_view(kEmbeddingMagic, 4));
  w.u32(kEmbeddingVersion);
  w.u32(static_cast<std::uint32_t>(set.dim));
  w.u32(static_cast<std::uint32_t>(set.class_names.size()));
  w.u32(static_cast<std::uint32_t>(set.records.size()));
  for (const auto& name : set.class_names) {
    if (name.size() > UINT16_MAX) throw ContractViolation("class name longer than 65535 bytes");
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
  }
  for (const auto& r : set.records) {
    w.u32(r.class_index);
    for (const double x : r.vector) w.f32(static_cast<float>(x));
  }
  return w.bytes();
}

EmbeddingSet decode_embedding_set(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.raw(4, "header");
  if (magic != std::string_view(kEmbeddingMagic, 4)) {
    throw FormatError("header", 0, "bad magic '" + magic + "', expected 'CEM1'");
  }
  const auto version_at = r.offset();
  const auto version = r.u32("header");
  if (version != kEmbeddingVersion) {
    throw FormatError("header", version_at, "unsupported version " + std::to_string(version));
  }
  EmbeddingSet set;
  set.dim = r.u32("header");
  const auto num_classes = r.u32("header");
  const auto num_records = r.u32("header");

  set.class_names.reserve(std::min<std::size_t>(num_classes, r.remaining() / 2));
  std::set<std::string> names;
  for (std::uint32_t k = 0; k < num_classes; ++k) {
    const auto at = r.offset();
    const auto len = r.u16("class table");
    auto name = r.raw(len, "class table");
    if (!names.insert(name).second) {
      throw FormatError("class table", at, "duplicate class name '" + name + "'");
    }
    set.class_names.push_back(std::move(name));
  }

  const std::size_t record_bytes = 4 + 4 * static_cast<std::size_t>(set.dim);
  set.records.reserve(std::min<std::size_t>(num_records, r.remaining() / record_bytes));
  for (std::uint32_t i = 0; i < num_records; ++i) {
    const auto at = r.offset();
    EmbeddingRecord rec;
    rec.class_index = r.u32("records");
    if (rec.class_index >= num_classes) {
      throw FormatError("records", at,
                        "class index " + std::to_string(rec.class_index) + " out of range");
    }
    rec.vector = DenseVector(set.dim);
    for (std::size_t j = 0; j < set.dim; ++j) {
      const auto value_at = r.offset();
      const float x = r.f32("records");
      if (!std::isfinite(x)) throw FormatError("records", value_at, "non-finite float");
      rec.vector[j] = x;
    }
    set.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw FormatError("trailer", r.offset(),
                      std::to_string(r.remaining()) + " unexpected trailing bytes");
  }
  return set;
}

EmbeddingSet read_embedding_file(const std::filesystem::path& path) {
  return decode_embedding_set(detail::read_file_bytes(path));
}

void write_embedding_file(const EmbeddingSet& set, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_embedding_set(set));
}

std::string_view to_string(Split s) noexcept { return s == Split::b0 ? "b0" : "b50"; }

Split parse_split(std::string_view s) {
  if (s == "b0") return Split::b0;
  if (s == "b50") return Split::b50;
  throw ConfigError("split must be \"b0\" or \"b50\", got \"" + std::string(s) + "\"");
}

namespace {

void check_permutation(const std::vector<std::size_t>& order) {
  std::vector<bool> hit(order.size(), false);
  for (const auto c : order) {
    if (c >= order.size() || hit[c]) throw ConfigError("class_order is not a permutation");
    hit[c] = true;
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

Manifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("manifest: expected a JSON object");
  static const std::set<std::string> known = {"image_embeddings", "text_embeddings", "split",
                                              "num_tasks",        "seed",            "class_order"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) throw ConfigError("manifest: unknown key '" + key + "'");
  }
  Manifest m;
  try {
    for (const auto& p : doc.at("image_embeddings")) {
      m.image_embeddings.push_back(resolve(base_dir, p.get<std::string>()));
    }
    m.text_embeddings = resolve(base_dir, doc.at("text_embeddings").get<std::string>());
    m.split = parse_split(doc.at("split").get<std::string>());
    const auto tasks = doc.at("num_tasks").get<std::int64_t>();
    if (tasks < 1) throw ConfigError("manifest: num_tasks must be >= 1");
    m.num_tasks = static_cast<std::size_t>(tasks);
    m.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("class_order")) {
      m.class_order = doc.at("class_order").get<std::vector<std::size_t>>();
      check_permutation(*m.class_order);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  if (m.image_embeddings.empty() || m.image_embeddings.size() > 2) {
    throw ConfigError("manifest: image_embeddings must list one file or [train, test]");
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  return parse_manifest(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        path.parent_path());
}

std::string manifest_to_json(const Manifest& manifest) {
  json doc;
  doc["image_embeddings"] = json::array();
  for (const auto& p : manifest.image_embeddings) doc["image_embeddings"].push_back(p.generic_string());
  doc["text_embeddings"] = manifest.text_embeddings.generic_string();
  doc["split"] = to_string(manifest.split);
  doc["num_tasks"] = manifest.num_tasks;
  doc["seed"] = manifest.seed;
  if (manifest.class_order) doc["class_order"] = *manifest.class_order;
  return doc.dump(2) + "\n";
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  detail::write_file_atomic(path, manifest_to_json(manifest));
}

std::vector<std::size_t> resolve_class_order(const std::optional<std::vector<std::size_t>>& explicit_order,
                                             std::size_t num_classes, std::uint64_t seed) {
  if (explicit_order) {
    if (explicit_order->size() != num_classes) {
      throw ConfigError("class_order has " + std::to_string(explicit_order->size()) +
                        " entries for " + std::to_string(num_classes) + " classes");
    }
    check_permutation(*explicit_order);
    return *explicit_order;
  }
  std::vector<std::size_t> order(num_classes);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "class_order"));
  rng.shuffle(std::span(order));
  return order;
}

std::vector<std::vector<std::size_t>> split_tasks(Split split, std::size_t num_tasks,
                                                  const std::vector<std::size_t>& class_order) {
  const std::size_t k = class_order.size();
  if (num_tasks < 1) throw ConfigError("num_tasks must be >= 1");
  std::vector<std::size_t> sizes;
  if (split == Split::b0) {
    if (k % num_tasks != 0) {
      throw ConfigError("B0 split: " + std::to_string(k) + " classes do not divide into " +
                        std::to_string(num_tasks) + " tasks");
    }
    sizes.assign(num_tasks, k / num_tasks);
  } else {
    const std::size_t first = (k + 1) / 2;
    const std::size_t rest = k - first;
    if (num_tasks == 1) {
      if (rest != 0) throw ConfigError("B50 split needs at least 2 tasks");
      sizes = {first};
    } else {
      if (rest % (num_tasks - 1) != 0 || rest / (num_tasks - 1) == 0) {
        throw ConfigError("B50 split: remaining " + std::to_string(rest) +
                          " classes do not divide into " + std::to_string(num_tasks - 1) +
                          " tasks");
      }
      sizes.assign(num_tasks, rest / (num_tasks - 1));
      sizes[0] = first;
    }
  }
  if (sizes.front() == 0) throw ConfigError("split produces empty tasks");
  std::vector<std::vector<std::size_t>> tasks;
  auto it = class_order.begin();
  for (const auto n : sizes) {
    tasks.emplace_back(it, it + static_cast<std::ptrdiff_t>(n));
    it += static_cast<std::ptrdiff_t>(n);
  }
  return tasks;
}

std::vector<std::vector<std::size_t>> split_tasks(const Manifest& manifest, std::size_t num_classes) {
  return split_tasks(manifest.split, manifest.num_tasks,
                     resolve_class_order(manifest.class_order, num_classes, manifest.seed));
}

}  // namespace cladapt
