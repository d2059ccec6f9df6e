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

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "cladapt/linalg.hpp"

namespace cladapt {

enum class AdapterKind : std::uint8_t { identity = 0, linear = 1, self_attention = 2, mlp = 3 };

/// How self-attention treats a single embedding.
///  scalar: one token, so the attention weight is softmax of a 1x1 score (always 1) and A = V.
///  outer:  row-softmax over the M x M score matrix Q Kᵀ / sqrt(M), A = alpha V.
enum class AttentionMode : std::uint8_t { scalar = 0, outer = 1 };

enum class InitScheme { identity_perturbed, gaussian };

std::string_view to_string(AdapterKind k) noexcept;
std::string_view to_string(AttentionMode m) noexcept;
std::string_view to_string(InitScheme s) noexcept;
AdapterKind parse_adapter_kind(std::string_view s);
AttentionMode parse_attention_mode(std::string_view s);
InitScheme parse_init_scheme(std::string_view s);

/// Number of M x M matrices an adapter of `kind` owns.
std::size_t matrix_count(AdapterKind kind) noexcept;
std::size_t parameter_count(AdapterKind kind, std::size_t dim) noexcept;

/// Trainable parameters of one adapter.
///   identity:        []
///   linear:          [W]
///   self_attention:  [W_q, W_k, W_v]
///   mlp:             [W1, W2]   (A = W2 relu(W1 I))
struct AdapterParams {
  AdapterKind kind = AdapterKind::identity;
  AttentionMode attention_mode = AttentionMode::outer;
  std::size_t dim = 0;
  std::vector<DenseMatrix> matrices;

  std::size_t parameter_count() const noexcept { return cladapt::parameter_count(kind, dim); }

  friend bool operator==(const AdapterParams&, const AdapterParams&) = default;
};

/// Parameters concatenated row-major in matrix-list order.
struct FlatParamView {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const FlatParamView&, const FlatParamView&) = default;
};

FlatParamView flatten(const AdapterParams& params);
AdapterParams unflatten(const FlatParamView& view, AdapterKind kind, std::size_t dim,
                        AttentionMode mode = AttentionMode::outer);

/// Segment lengths of the flat view, one per matrix.
std::vector<std::size_t> segment_sizes(const AdapterParams& params);

struct InitOptions {
  InitScheme scheme = InitScheme::identity_perturbed;
  /// Perturbation scale for identity_perturbed. 0 gives the exact identity.
  double epsilon = 0.01;
  /// Self-attention matrices are drawn Gaussian regardless of `scheme`
  /// unless this is false.
  bool attention_gaussian = true;

  friend bool operator==(const InitOptions&, const InitOptions&) = default;
};

/// Deterministic for a fixed seed. identity_perturbed: I + eps N(0,1);
/// gaussian: N(0, 1/M).
AdapterParams init_adapter(AdapterKind kind, std::size_t dim, std::uint64_t seed,
                           const InitOptions& options = {},
                           AttentionMode mode = AttentionMode::outer);

DenseVector forward(const AdapterParams& params, const DenseVector& input);

/// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
  DenseVector input;
  DenseVector output;
  DenseVector hidden;  // mlp: W1 I (pre-activation)
  DenseVector query, key, value;
  DenseMatrix attention;  // outer mode: row-stochastic weights
};

ForwardTrace forward_traced(const AdapterParams& params, const DenseVector& input);

/// Accumulates scale · dL/dθ into `grad` (flat canonical order) given
/// dL/dA for the traced sample.
void accumulate_backward(const AdapterParams& params, const ForwardTrace& trace,
                         const DenseVector& grad_output, double scale, FlatParamView& grad);

/// "CADP" checkpoint container.
std::vector<std::uint8_t> encode_checkpoint(const AdapterParams& params);
AdapterParams decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const AdapterParams& params, const std::filesystem::path& path);
AdapterParams read_checkpoint(const std::filesystem::path& path);

}  // namespace cladapt
