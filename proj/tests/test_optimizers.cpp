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
#include <vector>

#include "cladapt/errors.hpp"
#include "cladapt/optimizers.hpp"

using namespace cladapt;

TEST_CASE("zero learning rate leaves parameters unchanged") {
  for (const auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    Optimizer opt({kind, 0.1, 0.5}, 3);
    std::vector<double> theta{1, -2, 3};
    const auto before = theta;
    for (int i = 0; i < 5; ++i) opt.step(theta, std::vector<double>{4, 5, 6}, 0.0);
    CHECK(theta == before);
    CHECK(opt.step_count() == 5);
  }
}

TEST_CASE("plain sgd is a linear update") {
  OptimizerSettings s{OptimizerKind::sgd, 0.1, 0.0, 0.0};
  Optimizer opt(s, 2);
  std::vector<double> theta{1.0, 2.0};
  opt.step(theta, std::vector<double>{0.5, -1.0}, 0.2);
  CHECK(theta[0] == doctest::Approx(0.9));
  CHECK(theta[1] == doctest::Approx(2.2));
}

TEST_CASE("sgd momentum accumulates velocity") {
  Optimizer opt({OptimizerKind::sgd, 0.1, 0.0, 0.9}, 1);
  std::vector<double> theta{0.0};
  opt.step(theta, std::vector<double>{1.0}, 1.0);  // v = 1
  CHECK(theta[0] == doctest::Approx(-1.0));
  opt.step(theta, std::vector<double>{1.0}, 1.0);  // v = 1.9
  CHECK(theta[0] == doctest::Approx(-2.9));
}

TEST_CASE("adam minimises a quadratic") {
  Optimizer opt({OptimizerKind::adam, 0.1, 0.0}, 1);
  std::vector<double> theta{1.0};
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> g{2.0 * theta[0]};
    opt.step(theta, g, 0.1);
  }
  CHECK(std::abs(theta[0]) < 1e-3);
}

TEST_CASE("adam first step has magnitude lr") {
  Optimizer opt({OptimizerKind::adam, 0.1, 0.0}, 2);
  std::vector<double> theta{0.0, 0.0};
  opt.step(theta, std::vector<double>{3.0, -1e-3}, 0.05);
  CHECK(theta[0] == doctest::Approx(-0.05).epsilon(1e-6));
  CHECK(theta[1] == doctest::Approx(0.05).epsilon(1e-4));
}

TEST_CASE("weight decay shrinks parameters under zero gradient") {
  for (const auto kind : {OptimizerKind::sgd, OptimizerKind::adam}) {
    Optimizer opt({kind, 0.1, 0.1}, 3);
    std::vector<double> theta{1, -2, 3};
    const double n0 = std::hypot(1.0, 2.0, 3.0);
    for (int i = 0; i < 10; ++i) opt.step(theta, std::vector<double>(3, 0.0), 0.1);
    CHECK(std::hypot(theta[0], theta[1], theta[2]) < n0);
  }
}

TEST_CASE("optimizer contract violations") {
  Optimizer opt({}, 2);
  std::vector<double> theta{0, 0};
  CHECK_THROWS_AS(opt.step(theta, std::vector<double>{1}, 0.1), ContractViolation);
  CHECK_THROWS_AS(opt.step(theta, std::vector<double>{1, 1}, -0.1), ContractViolation);
  CHECK(parse_optimizer_kind("adam") == OptimizerKind::adam);
  CHECK_THROWS(parse_optimizer_kind("rmsprop"));
}

TEST_CASE("cosine schedule endpoints and monotonicity") {
  const CosineSchedule s{0.1, 100};
  CHECK(s.lr_at(0) == doctest::Approx(0.1));
  CHECK(s.lr_at(50) == doctest::Approx(0.05));
  CHECK(s.lr_at(100) == doctest::Approx(0.0));
  for (std::size_t t = 1; t <= 100; ++t) CHECK(s.lr_at(t) <= s.lr_at(t - 1));
  CHECK_THROWS_AS(s.lr_at(101), ContractViolation);
}
