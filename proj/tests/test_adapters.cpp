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

#include <cmath>

#include "cladapt/adapters.hpp"
#include "cladapt/errors.hpp"
#include "test_support.hpp"

using namespace cladapt;
using cladapt::testing::random_matrix;
using cladapt::testing::random_vector;

TEST_CASE("parameter counts per kind") {
  CHECK(parameter_count(AdapterKind::identity, 8) == 0);
  CHECK(parameter_count(AdapterKind::linear, 8) == 64);
  CHECK(parameter_count(AdapterKind::self_attention, 8) == 3 * parameter_count(AdapterKind::linear, 8));
  CHECK(parameter_count(AdapterKind::mlp, 8) == 128);
}

TEST_CASE("identity and linear forward") {
  const DenseVector x{1.5, -2.0, 0.25};
  CHECK(forward(AdapterParams{AdapterKind::identity, AttentionMode::outer, 3, {}}, x) == x);
  const AdapterParams lin{AdapterKind::linear, AttentionMode::outer, 2, {DenseMatrix::identity(2)}};
  CHECK(forward(lin, DenseVector{1, 2}) == DenseVector{1, 2});
  const AdapterParams lin2{AdapterKind::linear, AttentionMode::outer, 2, {DenseMatrix{{1, 2}, {3, 4}}}};
  CHECK(forward(lin2, DenseVector{1, 1}) == DenseVector{3, 7});
  CHECK_THROWS_AS(forward(lin2, DenseVector{1, 1, 1}), ContractViolation);
}

TEST_CASE("linear forward is positively homogeneous") {
  Rng rng(1);
  const AdapterParams p{AdapterKind::linear, AttentionMode::outer, 6, {random_matrix(rng, 6, 6)}};
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_vector(rng, 6);
    const double c = 0.1 + 5 * rng.uniform();
    DenseVector cx(6);
    for (std::size_t i = 0; i < 6; ++i) cx[i] = c * x[i];
    const auto a = forward(p, x);
    const auto b = forward(p, cx);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(b[i] - c * a[i]) < 1e-12 * (1 + std::abs(b[i])));
  }
}

TEST_CASE("scalar-mode attention equals linear forward with W = W_v") {
  Rng rng(2);
  const std::size_t m = 7;
  const AdapterParams att{AdapterKind::self_attention, AttentionMode::scalar, m,
                          {random_matrix(rng, m, m), random_matrix(rng, m, m), random_matrix(rng, m, m)}};
  const AdapterParams lin{AdapterKind::linear, AttentionMode::outer, m, {att.matrices[2]}};
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_vector(rng, m, 3.0);
    CHECK(forward(att, x) == forward(lin, x));
  }
}

TEST_CASE("outer-mode attention against a naive oracle") {
  Rng rng(3);
  const std::size_t m = 4;
  const AdapterParams p{AdapterKind::self_attention, AttentionMode::outer, m,
                        {random_matrix(rng, m, m), random_matrix(rng, m, m), random_matrix(rng, m, m)}};
  const auto x = random_vector(rng, m);
  // Oracle: explicit Q, K, V and per-row exp/normalize without max-shift.
  double q[4], k[4], v[4];
  for (std::size_t i = 0; i < m; ++i) {
    q[i] = k[i] = v[i] = 0;
    for (std::size_t j = 0; j < m; ++j) {
      q[i] += p.matrices[0](i, j) * x[j];
      k[i] += p.matrices[1](i, j) * x[j];
      v[i] += p.matrices[2](i, j) * x[j];
    }
  }
  const auto out = forward(p, x);
  for (std::size_t i = 0; i < m; ++i) {
    double num = 0, den = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const double e = std::exp(q[i] * k[j] / 2.0);  // sqrt(4) = 2
      num += e * v[j];
      den += e;
    }
    CHECK(std::abs(out[i] - num / den) < 1e-12);
  }
}

TEST_CASE("mlp forward is W2 relu(W1 x)") {
  const AdapterParams p{AdapterKind::mlp, AttentionMode::outer, 2,
                        {DenseMatrix{{1, 0}, {0, -1}}, DenseMatrix{{2, 3}, {4, 5}}}};
  // W1 x = [1, -2] -> relu [1, 0] -> W2 [2, 4]
  CHECK(forward(p, DenseVector{1, 2}) == DenseVector{2, 4});
}

TEST_CASE("init is deterministic and matches its scheme") {
  const auto a = init_adapter(AdapterKind::linear, 16, 5);
  const auto b = init_adapter(AdapterKind::linear, 16, 5);
  CHECK(a == b);
  CHECK_FALSE(a == init_adapter(AdapterKind::linear, 16, 6));

  const auto exact = init_adapter(AdapterKind::linear, 8, 1, {InitScheme::identity_perturbed, 0.0});
  CHECK(exact.matrices[0] == DenseMatrix::identity(8));
  Rng rng(4);
  const auto x = random_vector(rng, 8);
  CHECK(forward(exact, x) == x);

  const auto perturbed = init_adapter(AdapterKind::mlp, 8, 1);
  for (const auto& m : perturbed.matrices) {
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(m(i, j) - (i == j ? 1.0 : 0.0)) < 0.1);
    }
  }
  CHECK(init_adapter(AdapterKind::self_attention, 4, 1).matrices.size() == 3);
  CHECK(init_adapter(AdapterKind::identity, 4, 1).matrices.empty());
}

TEST_CASE("gaussian init variance is 1/M") {
  const std::size_t m = 512;
  const auto p = init_adapter(AdapterKind::linear, m, 77, {InitScheme::gaussian});
  const auto& vals = p.matrices[0].values();
  REQUIRE(vals.size() >= 100000);
  double mean = 0, sq = 0;
  for (const double x : vals) mean += x;
  mean /= static_cast<double>(vals.size());
  for (const double x : vals) sq += (x - mean) * (x - mean);
  const double var = sq / static_cast<double>(vals.size() - 1);
  CHECK(std::abs(var - 1.0 / m) < 0.2 / m);
}

TEST_CASE("flatten order and round trip") {
  const AdapterParams p{AdapterKind::linear, AttentionMode::outer, 2, {DenseMatrix{{1, 2}, {3, 4}}}};
  CHECK(flatten(p).values == std::vector<double>{1, 2, 3, 4});
  CHECK(flatten(AdapterParams{AdapterKind::identity, AttentionMode::outer, 3, {}}).values.empty());
  CHECK_THROWS_AS(unflatten(FlatParamView{{1, 2, 3}}, AdapterKind::linear, 2), ContractViolation);

  Rng rng(8);
  for (const auto kind : {AdapterKind::identity, AdapterKind::linear, AdapterKind::self_attention, AdapterKind::mlp}) {
    for (std::size_t m = 1; m < 6; ++m) {
      FlatParamView v;
      for (std::size_t i = 0; i < parameter_count(kind, m); ++i) v.values.push_back(rng.normal());
      const auto p2 = unflatten(v, kind, m, AttentionMode::scalar);
      CHECK(flatten(p2) == v);
      CHECK(unflatten(flatten(p2), kind, m, AttentionMode::scalar) == p2);
    }
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  const auto p = init_adapter(AdapterKind::self_attention, 5, 3, {}, AttentionMode::scalar);
  const auto bytes = encode_checkpoint(p);
  CHECK(bytes.size() == 4 + 4 + 1 + 1 + 4 + 3 * 25 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CADP");
  const auto back = decode_checkpoint(bytes);
  CHECK(back.kind == p.kind);
  CHECK(back.attention_mode == AttentionMode::scalar);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 25; ++j) {
      CHECK(back.matrices[i].values()[j] == static_cast<float>(p.matrices[i].values()[j]));
    }
  }
  CHECK(encode_checkpoint(back) == bytes);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  auto bad_kind = bytes;
  bad_kind[8] = 9;
  CHECK_THROWS_AS(decode_checkpoint(bad_kind), FormatError);
}
