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

#include "cladapt/errors.hpp"
#include "cladapt/linalg.hpp"
#include "test_support.hpp"

using namespace cladapt;
using cladapt::testing::random_vector;

TEST_CASE("matvec") {
  CHECK(matvec(DenseMatrix::identity(3), DenseVector{1, 2, 3}) == DenseVector{1, 2, 3});
  CHECK(matvec(DenseMatrix{{1, 2}, {3, 4}}, DenseVector{1, 1}) == DenseVector{3, 7});
  CHECK(matvec(DenseMatrix::zeros(2, 2), DenseVector{5, 6}) == DenseVector{0, 0});
  CHECK_THROWS_AS(matvec(DenseMatrix::zeros(2, 3), DenseVector{1, 2}), ContractViolation);
}

TEST_CASE("matvec with identity is exact for random vectors") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = random_vector(rng, 1 + trial % 9, 100.0);
    CHECK(matvec(DenseMatrix::identity(v.dim()), v) == v);
  }
}

TEST_CASE("matvec_transposed agrees with explicit transpose") {
  const DenseMatrix m{{1, 2, 3}, {4, 5, 6}};
  const DenseMatrix mt{{1, 4}, {2, 5}, {3, 6}};
  const DenseVector v{0.5, -2};
  CHECK(matvec_transposed(m, v) == matvec(mt, v));
}

TEST_CASE("softmax") {
  const auto uniform = softmax(DenseVector{0, 0, 0});
  for (const double p : uniform) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const auto big = softmax(DenseVector{1000, 1000});
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);

  const auto r = softmax(DenseVector{0, std::log(3.0)});
  CHECK(std::abs(r[0] - 0.25) < 1e-12);
  CHECK(std::abs(r[1] - 0.75) < 1e-12);

  CHECK_THROWS_AS(softmax(DenseVector{}), ContractViolation);
}

TEST_CASE("softmax sums to one and preserves argmax on random inputs") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto v = random_vector(rng, 1 + trial % 17, trial % 2 ? 50.0 : 1.0);
    const auto p = softmax(v);
    double sum = 0.0;
    for (const double x : p) {
      CHECK(x > 0.0);
      CHECK(x <= 1.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    CHECK(argmax(p) == argmax(v));
  }
}

TEST_CASE("log_softmax matches log of softmax") {
  const DenseVector v{0.3, -1.2, 2.5};
  const auto ls = log_softmax(v);
  const auto s = softmax(v);
  for (std::size_t i = 0; i < v.dim(); ++i) CHECK(std::abs(ls[i] - std::log(s[i])) < 1e-14);
}

TEST_CASE("l2_normalize") {
  const auto a = l2_normalize(DenseVector{3, 4});
  CHECK(std::abs(a[0] - 0.6) < 1e-15);
  CHECK(std::abs(a[1] - 0.8) < 1e-15);
  CHECK(l2_normalize(DenseVector{2, 0, 0}) == DenseVector{1, 0, 0});
  CHECK(l2_normalize(DenseVector{1, 0}) == DenseVector{1, 0});
  CHECK_THROWS_AS(l2_normalize(DenseVector{0, 0}), DegenerateInput);
  CHECK_THROWS_AS(l2_normalize(DenseVector{1e-13, 0}), DegenerateInput);
}

TEST_CASE("l2_normalize is idempotent") {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto once = l2_normalize(random_vector(rng, 2 + trial % 30, 7.0));
    const auto twice = l2_normalize(once);
    CHECK(std::abs(l2_norm(once.span()) - 1.0) < 1e-9);
    for (std::size_t i = 0; i < once.dim(); ++i) CHECK(std::abs(once[i] - twice[i]) < 1e-12);
  }
}

TEST_CASE("argmax") {
  CHECK(argmax(DenseVector{0.1, 0.9, 0.5}) == 1);
  CHECK(argmax(DenseVector{1, 1}) == 0);
  CHECK(argmax(DenseVector{-5}) == 0);
  CHECK_THROWS_AS(argmax(DenseVector{}), ContractViolation);
}

TEST_CASE("DenseMatrix rejects mismatched storage") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>(3)), ContractViolation);
  CHECK_THROWS_AS((DenseMatrix{{1, 2}, {3}}), ContractViolation);
}

TEST_CASE("normalize_rows") {
  const auto n = normalize_rows(DenseMatrix{{3, 4}, {0, 2}});
  CHECK(std::abs(n(0, 0) - 0.6) < 1e-15);
  CHECK(n(1, 1) == 1.0);
  CHECK_THROWS_AS(normalize_rows(DenseMatrix{{0, 0}}), DegenerateInput);
}
