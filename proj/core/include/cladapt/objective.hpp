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

#include <cstddef>
#include <optional>
#include <vector>

#include "cladapt/adapters.hpp"
#include "cladapt/linalg.hpp"

namespace cladapt {

/// How adapted features are scored against text rows.
struct LogitConfig {
  /// L2-normalize both the adapted feature and the text rows (cosine logits).
  bool normalize = true;
  /// Multiplier on cosine similarities; ignored when normalize is false.
  double logit_scale = 100.0;

  friend bool operator==(const LogitConfig&, const LogitConfig&) = default;
};

struct Batch {
  std::vector<DenseVector> inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const noexcept { return inputs.size(); }
};

/// z_c = s <Â, b̂_c> when normalizing, <A, b_c> otherwise.
DenseVector logits(const DenseVector& adapted, const DenseMatrix& text, const LogitConfig& cfg);

/// Same as logits() for text rows already passed through prepare_text().
DenseVector logits_prepared(const DenseVector& adapted, const DenseMatrix& prepared_text,
                            const LogitConfig& cfg);
DenseMatrix prepare_text(const DenseMatrix& text, const LogitConfig& cfg);

/// Mean softmax cross-entropy of the adapter over the batch.
double ce_loss(const AdapterParams& params, const Batch& batch, const DenseMatrix& text,
               const LogitConfig& cfg);
FlatParamView ce_grad(const AdapterParams& params, const Batch& batch, const DenseMatrix& text,
                      const LogitConfig& cfg);

/// Distillation toward a frozen previous adapter on the logits of the first
/// `old_classes` text rows. Applied to the samples flagged in `apply_to`.
struct DistillationTerm {
  const AdapterParams* previous = nullptr;
  std::size_t old_classes = 0;
  double temperature = 2.0;
  double weight = 1.0;
  /// One flag per batch sample; empty means every sample.
  std::vector<bool> apply_to;
};

struct LossAndGrad {
  double loss = 0.0;
  FlatParamView grad;
};

/// CE (plus optional distillation) loss and its gradient in one pass. The
/// distillation contribution is summed over flagged samples and divided by
/// the full batch size.
LossAndGrad adapter_loss_and_grad(const AdapterParams& params, const Batch& batch,
                                  const DenseMatrix& text, const LogitConfig& cfg,
                                  const DistillationTerm* distill = nullptr);

/// λ τ² KL(softmax(prev/τ) ‖ softmax(cur/τ)).
double kd_loss(const DenseVector& current, const DenseVector& previous, double temperature,
               double weight);
/// Gradient of kd_loss with respect to `current`: λ τ (softmax(cur/τ) − softmax(prev/τ)).
DenseVector kd_grad(const DenseVector& current, const DenseVector& previous, double temperature,
                    double weight);

/// Affine softmax classifier on raw embeddings, one row per seen class.
struct ProbeHead {
  DenseMatrix weights;  // K × M
  DenseVector bias;     // K

  std::size_t num_classes() const noexcept { return weights.rows(); }
  friend bool operator==(const ProbeHead&, const ProbeHead&) = default;
};

DenseVector probe_logits(const ProbeHead& head, const DenseVector& input);
double probe_loss(const ProbeHead& head, const Batch& batch);

struct ProbeGrad {
  DenseMatrix weights;
  DenseVector bias;
};
ProbeGrad probe_grad(const ProbeHead& head, const Batch& batch);

}  // namespace cladapt
