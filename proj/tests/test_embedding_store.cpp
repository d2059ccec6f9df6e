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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <limits>
#include <set>

#include "cladapt/embedding_store.hpp"
#include "cladapt/errors.hpp"
#include "test_support.hpp"

using namespace cladapt;

namespace {

EmbeddingSet sample_set(std::uint64_t seed, std::size_t dim, std::size_t classes, std::size_t n) {
  Rng rng(seed);
  EmbeddingSet s;
  s.dim = dim;
  for (std::size_t c = 0; c < classes; ++c) s.class_names.push_back("cls_" + std::to_string(c) + "_é");
  for (std::size_t i = 0; i < n; ++i) {
    s.records.push_back({static_cast<std::uint32_t>(rng.below(classes)),
                         cladapt::testing::random_vector(rng, dim)});
  }
  return s;
}

EmbeddingSet narrowed(EmbeddingSet s) {
  for (auto& r : s.records) {
    for (double& x : r.vector) x = static_cast<float>(x);
  }
  return s;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cladapt_test_" + name);
}

}  // namespace

TEST_CASE("read(write(S)) equals S after 32-bit narrowing") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = sample_set(seed, 1 + seed % 7, 1 + seed % 4, seed * 3);
    const auto bytes = encode_embedding_set(s);
    CHECK(bytes.size() == embedding_file_size(s));
    CHECK(decode_embedding_set(bytes) == narrowed(s));
  }
}

TEST_CASE("file round trip and deterministic bytes") {
  const auto s = sample_set(4, 5, 3, 12);
  const auto p = temp_path("roundtrip.cem");
  write_embedding_file(s, p);
  const auto first = encode_embedding_set(s);
  CHECK(read_embedding_file(p) == narrowed(s));
  CHECK(encode_embedding_set(s) == first);
  std::filesystem::remove(p);
}

TEST_CASE("container size for one class and one 2-d vector") {
  // header 20 + table (2 + 1) + record (4 + 2*4)
  EmbeddingSet s{2, {"a"}, {{0, DenseVector{1.0, 2.0}}}};
  CHECK(encode_embedding_set(s).size() == 35);
  CHECK(embedding_file_size(s) == 35);
}

TEST_CASE("header layout is little-endian") {
  EmbeddingSet s{3, {"x", "yy"}, {}};
  const auto b = encode_embedding_set(s);
  CHECK(std::string(b.begin(), b.begin() + 4) == "CEM1");
  CHECK(b[4] == 1);
  CHECK(b[8] == 3);
  CHECK(b[12] == 2);
  CHECK(b[16] == 0);
  CHECK(b[20] == 1);
  CHECK(b[21] == 0);
  CHECK(b[22] == 'x');
}

TEST_CASE("empty record list is valid") {
  EmbeddingSet s{4, {"a", "b", "c"}, {}};
  const auto back = decode_embedding_set(encode_embedding_set(s));
  CHECK(back.records.empty());
  CHECK(back.num_classes() == 3);
}

TEST_CASE("bad magic is a format error") {
  auto b = encode_embedding_set(EmbeddingSet{1, {"a"}, {}});
  std::copy_n("XXXX", 4, b.begin());
  CHECK_THROWS_AS(decode_embedding_set(b), FormatError);
}

TEST_CASE("truncation reports the section and offset") {
  const auto full = encode_embedding_set(sample_set(1, 3, 2, 4));
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, std::size_t{23}, full.size() - 1}) {
    std::vector<std::uint8_t> b(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(cut));
    try {
      decode_embedding_set(b);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() <= cut);
      if (cut == full.size() - 1) CHECK(e.section() == "records");
      if (cut == 10) CHECK(e.section() == "header");
    }
  }
}

TEST_CASE("out-of-range class index and non-finite payload are rejected on read") {
  EmbeddingSet s{1, {"a"}, {{0, DenseVector{1.0}}}};
  auto b = encode_embedding_set(s);
  const std::size_t rec = kEmbeddingHeaderBytes + 3;
  auto bad_index = b;
  bad_index[rec] = 5;
  try {
    decode_embedding_set(bad_index);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == rec);
  }
  auto nan = b;
  nan[rec + 4 + 3] = 0x7F;
  nan[rec + 4 + 2] = 0xC0;
  CHECK_THROWS_AS(decode_embedding_set(nan), FormatError);
}

TEST_CASE("non-finite vectors are rejected before write") {
  EmbeddingSet s{2, {"a"}, {{0, DenseVector{1.0, std::numeric_limits<double>::infinity()}}}};
  CHECK_THROWS_AS(encode_embedding_set(s), ContractViolation);
  EmbeddingSet overflow{1, {"a"}, {{0, DenseVector{1e300}}}};
  CHECK_THROWS_AS(encode_embedding_set(overflow), ContractViolation);
}

TEST_CASE("set invariants") {
  EmbeddingSet dup{1, {"a", "a"}, {}};
  CHECK_THROWS_AS(dup.validate(), ContractViolation);
  EmbeddingSet bad_dim{2, {"a"}, {{0, DenseVector{1.0}}}};
  CHECK_THROWS_AS(bad_dim.validate(), ContractViolation);
  EmbeddingSet text{2, {"a", "b"}, {{1, DenseVector{0, 1}}, {0, DenseVector{1, 0}}}};
  CHECK(text.is_text_set());
  const auto m = text_matrix(text);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(1, 1) == 1.0);
  text.records.pop_back();
  CHECK_FALSE(text.is_text_set());
  CHECK_THROWS_AS(text_matrix(text), ContractViolation);
}

TEST_CASE("split_tasks B0 partitions the classes") {
  const auto order = resolve_class_order(std::nullopt, 10, 3);
  const auto tasks = split_tasks(Split::b0, 5, order);
  REQUIRE(tasks.size() == 5);
  std::set<std::size_t> all;
  for (const auto& t : tasks) {
    CHECK(t.size() == 2);
    all.insert(t.begin(), t.end());
  }
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);
}

TEST_CASE("split_tasks B50 puts half the classes in the first task") {
  std::vector<std::size_t> order(20);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto tasks = split_tasks(Split::b50, 3, order);
  REQUIRE(tasks.size() == 3);
  CHECK(tasks[0].size() == 10);
  CHECK(tasks[1].size() == 5);
  CHECK(tasks[2].size() == 5);
  // Odd K: ceil(K/2) first.
  std::vector<std::size_t> odd(9);
  std::iota(odd.begin(), odd.end(), std::size_t{0});
  CHECK(split_tasks(Split::b50, 3, odd)[0].size() == 5);
}

TEST_CASE("indivisible splits are configuration errors") {
  std::vector<std::size_t> order(10);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CHECK_THROWS_AS(split_tasks(Split::b0, 3, order), ConfigError);
  CHECK_THROWS_AS(split_tasks(Split::b50, 4, order), ConfigError);
  CHECK_THROWS_AS(split_tasks(Split::b50, 1, order), ConfigError);
}

TEST_CASE("class order is seed-deterministic and always a permutation") {
  CHECK(resolve_class_order(std::nullopt, 30, 5) == resolve_class_order(std::nullopt, 30, 5));
  std::vector<std::size_t> base(30);
  std::iota(base.begin(), base.end(), std::size_t{0});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto o = resolve_class_order(std::nullopt, 30, seed);
    std::sort(o.begin(), o.end());
    CHECK(o == base);
  }
  CHECK(resolve_class_order(std::nullopt, 30, 1) != resolve_class_order(std::nullopt, 30, 2));
  CHECK(resolve_class_order(std::vector<std::size_t>{2, 0, 1}, 3, 9) == std::vector<std::size_t>{2, 0, 1});
  CHECK_THROWS_AS(resolve_class_order(std::vector<std::size_t>{0, 0, 1}, 3, 9), ConfigError);
  CHECK_THROWS_AS(resolve_class_order(std::vector<std::size_t>{0, 1}, 3, 9), ConfigError);
}

TEST_CASE("manifest JSON") {
  const auto m = parse_manifest(R"({"image_embeddings": ["train.cem", "/abs/test.cem"],
    "text_embeddings": "text.cem", "split": "b50", "num_tasks": 3, "seed": 7,
    "class_order": [1, 0, 2]})",
                                "/data");
  CHECK(m.image_embeddings[0] == std::filesystem::path("/data/train.cem"));
  CHECK(m.image_embeddings[1] == std::filesystem::path("/abs/test.cem"));
  CHECK(m.text_embeddings == std::filesystem::path("/data/text.cem"));
  CHECK(m.split == Split::b50);
  CHECK(m.num_tasks == 3);
  CHECK(m.seed == 7);
  CHECK(*m.class_order == std::vector<std::size_t>{1, 0, 2});
  CHECK(parse_manifest(manifest_to_json(m)) == m);

  CHECK_THROWS_AS(parse_manifest(R"({"image_embeddings": ["a"], "text_embeddings": "t", "split": "b0",
    "num_tasks": 1, "seed": 0, "typo": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"({"image_embeddings": ["a"], "text_embeddings": "t", "split": "b7",
    "num_tasks": 1, "seed": 0})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_manifest(R"({"image_embeddings": ["a"], "text_embeddings": "t", "split": "b0",
    "num_tasks": 1, "seed": 0, "class_order": [0, 2]})"),
                  ConfigError);
}
