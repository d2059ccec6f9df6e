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
#include "cladapt/objective.hpp"
#include "test_support.hpp"

using namespace cladapt;
using namespace cladapt::testing;

namespace {

const AdapterParams kIdentity2{AdapterKind::identity, AttentionMode::outer, 2, {}};

std::vector<double> as_std(const DenseVector& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("cosine logits on orthonormal text") {
  const DenseMatrix text{{1, 0}, {0, 1}};
  const auto z = logits(DenseVector{1, 0}, text, {true, 100});
  CHECK(z[0] == doctest::Approx(100));
  CHECK(z[1] == doctest::Approx(0));
  const auto z2 = logits(DenseVector{1, 1}, text, {true, 100});
  CHECK(z2[0] == doctest::Approx(100 / std::sqrt(2.0)));
  CHECK(z2[1] == doctest::Approx(100 / std::sqrt(2.0)));
  const auto raw = logits(DenseVector{3, 4}, DenseMatrix{{2, 0}, {0, 1}}, {false, 100});
  CHECK(raw == DenseVector{6, 4});
  CHECK_THROWS_AS(logits(DenseVector{0, 0}, text, {}), DegenerateInput);
  CHECK_THROWS_AS(logits(DenseVector{1, 0, 0}, text, {}), ContractViolation);
}

TEST_CASE("logits match a term-by-term oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto text = random_matrix(rng, 6, 5);
    const auto a = random_vector(rng, 5, 2.0);
    for (const bool normalize : {true, false}) {
      const LogitConfig cfg{normalize, 37.0};
      CHECK(max_relative_error(as_std(logits(a, text, cfg)), naive_logits(as_std(a), text, cfg), 1e-9) < 1e-12);
    }
  }
}

TEST_CASE("cross-entropy worked examples") {
  Batch b{{DenseVector{1, 0}}, {0}};
  Batch tie{{DenseVector{1, 1}}, {0}};
  CHECK(ce_loss(kIdentity2, tie, DenseMatrix{{1, 0}, {0, 1}}, {true, 100}) == doctest::Approx(std::log(2.0)));
  const DenseMatrix three{{1, 0}, {0, 1}, {-1, 0}};
  Batch zero{{DenseVector{0, 0}}, {2}};
  CHECK(ce_loss(kIdentity2, zero, three, {false, 1}) == doctest::Approx(std::log(3.0)));
  CHECK(ce_loss(kIdentity2, b, DenseMatrix{{1, 0}, {0, 1}}, {true, 100}) < 1e-40);
  CHECK_THROWS_AS(ce_loss(kIdentity2, Batch{}, three, {}), ContractViolation);
  CHECK_THROWS_AS(ce_loss(kIdentity2, Batch{{DenseVector{1, 0}}, {3}}, three, {}), ContractViolation);
}

TEST_CASE("loss agrees with the term-by-term oracle") {
  Rng rng(12);
  for (const auto kind : {AdapterKind::identity, AdapterKind::linear, AdapterKind::self_attention, AdapterKind::mlp}) {
    for (const auto mode : {AttentionMode::scalar, AttentionMode::outer}) {
      for (const bool normalize : {true, false}) {
        const auto g = random_grad_problem(rng, kind, mode, 5, 4, 6);
        const LogitConfig cfg{normalize, 10.0};
        const double got = ce_loss(g.params, g.batch, g.text, cfg);
        const double want = naive_objective(g.params, g.batch, g.text, cfg);
        CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
        CHECK(adapter_loss_and_grad(g.params, g.batch, g.text, cfg).loss == doctest::Approx(got).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(13);
  for (const auto kind : {AdapterKind::linear, AdapterKind::self_attention, AdapterKind::mlp}) {
    for (const auto mode : {AttentionMode::scalar, AttentionMode::outer}) {
      if (kind != AdapterKind::self_attention && mode == AttentionMode::scalar) continue;
      for (const bool normalize : {true, false}) {
        for (const bool with_kd : {false, true}) {
          auto g = random_grad_problem(rng, kind, mode, 4, 5, 7);
          const LogitConfig cfg{normalize, 5.0};
          const auto prev = perturbed(g.params, rng, 0.05);
          DistillationTerm kd{&prev, 3, 2.0, 0.7, {}};
          const DistillationTerm* kdp = with_kd ? &kd : nullptr;
          const auto analytic = adapter_loss_and_grad(g.params, g.batch, g.text, cfg, kdp).grad.values;
          const auto numeric = central_differences(
              [&](const std::vector<double>& theta) {
                return naive_objective(unflatten({theta}, kind, 4, mode), g.batch, g.text, cfg, kdp);
              },
              flatten(g.params).values);
          INFO(to_string(kind), " ", to_string(mode), " normalize=", normalize, " kd=", with_kd);
          CHECK(max_relative_error(analytic, numeric) < 1e-4);
        }
      }
    }
  }
}

TEST_CASE("scalar-mode attention leaves query and key gradients at zero") {
  Rng rng(14);
  const auto g = random_grad_problem(rng, AdapterKind::self_attention, AttentionMode::scalar, 6, 4, 10);
  const auto grad = ce_grad(g.params, g.batch, g.text, {}).values;
  REQUIRE(grad.size() == 3 * 36);
  for (std::size_t i = 0; i < 72; ++i) CHECK(grad[i] == 0.0);
  double v_norm = 0.0;
  for (std::size_t i = 72; i < grad.size(); ++i) v_norm += std::abs(grad[i]);
  CHECK(v_norm > 0.0);
}

TEST_CASE("normalized loss is invariant to input scale for a linear adapter") {
  Rng rng(15);
  auto g = random_grad_problem(rng, AdapterKind::linear, AttentionMode::outer, 5, 4, 8);
  const double base = ce_loss(g.params, g.batch, g.text, {});
  for (const double c : {0.01, 3.0, 250.0}) {
    Batch scaled = g.batch;
    for (auto& x : scaled.inputs) {
      for (double& v : x) v *= c;
    }
    CHECK(ce_loss(g.params, scaled, g.text, {}) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("distillation loss closed form and zero weight") {
  // Two classes, temperature 1: KL(p || q) with p = softmax([0, 0]), q = softmax([a, 0]).
  const double a = 1.3;
  const double q0 = 1.0 / (1.0 + std::exp(-a));
  const double want = 0.5 * std::log(0.5 / q0) + 0.5 * std::log(0.5 / (1.0 - q0));
  CHECK(kd_loss(DenseVector{a, 0}, DenseVector{0, 0}, 1.0, 1.0) == doctest::Approx(want).epsilon(1e-12));
  CHECK(kd_loss(DenseVector{a, 0}, DenseVector{0, 0}, 1.0, 2.5) == doctest::Approx(2.5 * want).epsilon(1e-12));
  // tau^2 scaling: logits 2a at tau 2 reproduce the tau-1 KL times 4.
  CHECK(kd_loss(DenseVector{2 * a, 0}, DenseVector{0, 0}, 2.0, 1.0) == doctest::Approx(4 * want).epsilon(1e-12));
  CHECK(kd_loss(DenseVector{3, 1}, DenseVector{-2, 5}, 2.0, 0.0) == 0.0);
  CHECK(kd_loss(DenseVector{1, 2}, DenseVector{1, 2}, 2.0, 1.0) == doctest::Approx(0.0));
  const auto g = kd_grad(DenseVector{a, 0}, DenseVector{0, 0}, 1.0, 1.0);
  CHECK(g[0] == doctest::Approx(q0 - 0.5));
  CHECK(g[1] == doctest::Approx(0.5 - q0));
  CHECK_THROWS_AS(kd_loss(DenseVector{1}, DenseVector{1, 2}, 1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(kd_loss(DenseVector{1}, DenseVector{1}, 0.0, 1.0), ContractViolation);
}

TEST_CASE("zero-weight distillation leaves loss and gradient untouched") {
  Rng rng(16);
  const auto g = random_grad_problem(rng, AdapterKind::linear, AttentionMode::outer, 5, 4, 8);
  const auto prev = random_grad_problem(rng, AdapterKind::linear, AttentionMode::outer, 5, 4, 1).params;
  const DistillationTerm kd{&prev, 2, 2.0, 0.0, {}};
  const auto plain = adapter_loss_and_grad(g.params, g.batch, g.text, {});
  const auto with = adapter_loss_and_grad(g.params, g.batch, g.text, {}, &kd);
  CHECK(plain.loss == with.loss);
  CHECK(plain.grad == with.grad);
}

TEST_CASE("probe logits, shift invariance and gradient") {
  Rng rng(17);
  ProbeHead head{random_matrix(rng, 4, 3), random_vector(rng, 4)};
  Batch b;
  for (int i = 0; i < 9; ++i) {
    b.inputs.push_back(random_vector(rng, 3));
    b.labels.push_back(static_cast<std::size_t>(i % 4));
  }
  const double base = probe_loss(head, b);
  ProbeHead shifted = head;
  for (double& x : shifted.bias) x += 7.25;
  CHECK(probe_loss(shifted, b) == doctest::Approx(base).epsilon(1e-12));

  const auto grad = probe_grad(head, b);
  std::vector<double> theta(head.weights.span().begin(), head.weights.span().end());
  theta.insert(theta.end(), head.bias.begin(), head.bias.end());
  const auto numeric = central_differences(
      [&](const std::vector<double>& t) {
        ProbeHead h{DenseMatrix(4, 3, std::vector<double>(t.begin(), t.begin() + 12)),
                    DenseVector(std::vector<double>(t.begin() + 12, t.end()))};
        return probe_loss(h, b);
      },
      theta);
  std::vector<double> analytic(grad.weights.span().begin(), grad.weights.span().end());
  analytic.insert(analytic.end(), grad.bias.begin(), grad.bias.end());
  CHECK(max_relative_error(analytic, numeric) < 1e-6);
  CHECK(probe_logits(ProbeHead{DenseMatrix{{1, 2}}, DenseVector{0.5}}, DenseVector{3, 4}) == DenseVector{11.5});
}
