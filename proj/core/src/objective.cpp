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

#include "cladapt/objective.hpp"

#include <cmath>
#include <string>

#include "cladapt/errors.hpp"

namespace cladapt {
namespace {

void check_batch(const Batch& batch, std::size_t num_classes, const char* op) {
  if (batch.inputs.empty()) throw ContractViolation(std::string(op) + ": empty batch");
  if (batch.inputs.size() != batch.labels.size()) {
    throw ContractViolation(std::string(op) + ": inputs and labels differ in length");
  }
  for (const auto y : batch.labels) {
    if (y >= num_classes) {
      throw ContractViolation(std::string(op) + ": label " + std::to_string(y) +
                              " out of range for " + std::to_string(num_classes) + " classes");
    }
  }
}

DenseVector head(const DenseVector& v, std::size_t n) {
  return DenseVector(std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)));
}

DenseVector scaled(const DenseVector& v, double s) {
  DenseVector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] * s;
  return out;
}

}  // namespace

DenseMatrix prepare_text(const DenseMatrix& text, const LogitConfig& cfg) {
  if (cfg.normalize && !(cfg.logit_scale > 0.0)) {
    throw ContractViolation("logit_scale must be > 0");
  }
  return cfg.normalize ? normalize_rows(text) : text;
}

DenseVector logits_prepared(const DenseVector& adapted, const DenseMatrix& prepared_text,
                            const LogitConfig& cfg) {
  if (adapted.dim() != prepared_text.cols()) {
    throw ContractViolation("logits: feature dim " + std::to_string(adapted.dim()) +
                            " != text dim " + std::to_string(prepared_text.cols()));
  }
  if (!cfg.normalize) return matvec(prepared_text, adapted);
  auto z = matvec(prepared_text, l2_normalize(adapted));
  for (double& x : z) x *= cfg.logit_scale;
  return z;
}

DenseVector logits(const DenseVector& adapted, const DenseMatrix& text, const LogitConfig& cfg) {
  return logits_prepared(adapted, prepare_text(text, cfg), cfg);
}

LossAndGrad adapter_loss_and_grad(const AdapterParams& params, const Batch& batch,
                                  const DenseMatrix& text, const LogitConfig& cfg,
                                  const DistillationTerm* distill) {
  check_batch(batch, text.rows(), "ce_loss");
  if (distill) {
    if (!distill->previous) throw ContractViolation("distillation: missing previous adapter");
    if (distill->old_classes > text.rows()) {
      throw ContractViolation("distillation: more old classes than text rows");
    }
    if (!distill->apply_to.empty() && distill->apply_to.size() != batch.size()) {
      throw ContractViolation("distillation: apply_to length != batch size");
    }
  }
  const DenseMatrix prepared = prepare_text(text, cfg);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  LossAndGrad out;
  out.grad.values.assign(params.parameter_count(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto trace = forward_traced(params, batch.inputs[i]);
    const DenseVector& a = trace.output;
    const auto z = logits_prepared(a, prepared, cfg);
    const auto logp = log_softmax(z);
    const std::size_t y = batch.labels[i];
    out.loss -= logp[y];

    DenseVector dz(z.dim());
    for (std::size_t c = 0; c < z.dim(); ++c) dz[c] = std::exp(logp[c]);
    dz[y] -= 1.0;

    const bool apply_kd = distill && distill->old_classes > 0 && distill->weight != 0.0 &&
                          (distill->apply_to.empty() || distill->apply_to[i]);
    if (apply_kd) {
      const auto prev_z =
          logits_prepared(forward(*distill->previous, batch.inputs[i]), prepared, cfg);
      const auto cur_old = head(z, distill->old_classes);
      const auto prev_old = head(prev_z, distill->old_classes);
      out.loss += kd_loss(cur_old, prev_old, distill->temperature, distill->weight);
      const auto g = kd_grad(cur_old, prev_old, distill->temperature, distill->weight);
      for (std::size_t c = 0; c < g.dim(); ++c) dz[c] += g[c];
    }

    if (params.parameter_count() == 0) continue;

    DenseVector da;
    if (cfg.normalize) {
      const double norm = l2_norm(a.span());
      const auto a_hat = l2_normalize(a);
      auto d_hat = matvec_transposed(prepared, dz);
      for (double& x : d_hat) x *= cfg.logit_scale;
      const double proj = dot(a_hat.span(), d_hat.span());
      da = DenseVector(a.dim());
      for (std::size_t k = 0; k < a.dim(); ++k) da[k] = (d_hat[k] - a_hat[k] * proj) / norm;
    } else {
      da = matvec_transposed(prepared, dz);
    }
    accumulate_backward(params, trace, da, inv_n, out.grad);
  }
  out.loss *= inv_n;
  return out;
}

double ce_loss(const AdapterParams& params, const Batch& batch, const DenseMatrix& text,
               const LogitConfig& cfg) {
  check_batch(batch, text.rows(), "ce_loss");
  const DenseMatrix prepared = prepare_text(text, cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto z = logits_prepared(forward(params, batch.inputs[i]), prepared, cfg);
    total -= log_softmax(z)[batch.labels[i]];
  }
  return total / static_cast<double>(batch.size());
}

FlatParamView ce_grad(const AdapterParams& params, const Batch& batch, const DenseMatrix& text,
                      const LogitConfig& cfg) {
  return adapter_loss_and_grad(params, batch, text, cfg).grad;
}

double kd_loss(const DenseVector& current, const DenseVector& previous, double temperature,
               double weight) {
  if (current.dim() != previous.dim()) {
    throw ContractViolation("kd_loss: logit dims differ (" + std::to_string(current.dim()) +
                            " vs " + std::to_string(previous.dim()) + ")");
  }
  if (!(temperature > 0.0) || weight < 0.0) {
    throw ContractViolation("kd_loss: need temperature > 0 and weight >= 0");
  }
  if (weight == 0.0 || current.empty()) return 0.0;
  const double inv_t = 1.0 / temperature;
  const auto log_p = log_softmax(scaled(previous, inv_t));
  const auto log_q = log_softmax(scaled(current, inv_t));
  double kl = 0.0;
  for (std::size_t c = 0; c < log_p.dim(); ++c) kl += std::exp(log_p[c]) * (log_p[c] - log_q[c]);
  // KL is non-negative; clamp the rounding residue at equality.
  if (kl < 0.0) kl = 0.0;
  return weight * temperature * temperature * kl;
}

DenseVector kd_grad(const DenseVector& current, const DenseVector& previous, double temperature,
                    double weight) {
  if (current.dim() != previous.dim()) throw ContractViolation("kd_grad: logit dims differ");
  if (!(temperature > 0.0) || weight < 0.0) {
    throw ContractViolation("kd_grad: need temperature > 0 and weight >= 0");
  }
  DenseVector g(current.dim());
  if (weight == 0.0 || current.empty()) return g;
  const double inv_t = 1.0 / temperature;
  const auto p = softmax(scaled(previous, inv_t));
  const auto q = softmax(scaled(current, inv_t));
  for (std::size_t c = 0; c < g.dim(); ++c) g[c] = weight * temperature * (q[c] - p[c]);
  return g;
}

DenseVector probe_logits(const ProbeHead& head, const DenseVector& input) {
  auto z = matvec(head.weights, input);
  if (head.bias.dim() != z.dim()) throw ContractViolation("probe: bias dim != class count");
  for (std::size_t c = 0; c < z.dim(); ++c) z[c] += head.bias[c];
  return z;
}

double probe_loss(const ProbeHead& head, const Batch& batch) {
  check_batch(batch, head.num_classes(), "probe_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total -= log_softmax(probe_logits(head, batch.inputs[i]))[batch.labels[i]];
  }
  return total / static_cast<double>(batch.size());
}

ProbeGrad probe_grad(const ProbeHead& head, const Batch& batch) {
  check_batch(batch, head.num_classes(), "probe_grad");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  ProbeGrad g{DenseMatrix(head.weights.rows(), head.weights.cols()), DenseVector(head.bias.dim())};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto d = softmax(probe_logits(head, batch.inputs[i]));
    d[batch.labels[i]] -= 1.0;
    add_outer(g.weights, d.span(), batch.inputs[i].span(), inv_n);
    for (std::size_t c = 0; c < d.dim(); ++c) g.bias[c] += inv_n * d[c];
  }
  return g;
}

}  // namespace cladapt
