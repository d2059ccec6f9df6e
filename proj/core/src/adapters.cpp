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

#include "cladapt/adapters.hpp"

#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "cladapt/errors.hpp"
#include "cladapt/rng.hpp"

namespace cladapt {

std::string_view to_string(AdapterKind k) noexcept {
  switch (k) {
    case AdapterKind::identity: return "identity";
    case AdapterKind::linear: return "linear";
    case AdapterKind::self_attention: return "self_attention";
    case AdapterKind::mlp: return "mlp";
  }
  return "?";
}

std::string_view to_string(AttentionMode m) noexcept {
  return m == AttentionMode::scalar ? "scalar" : "outer";
}

std::string_view to_string(InitScheme s) noexcept {
  return s == InitScheme::identity_perturbed ? "identity_perturbed" : "gaussian";
}

AdapterKind parse_adapter_kind(std::string_view s) {
  if (s == "identity") return AdapterKind::identity;
  if (s == "linear") return AdapterKind::linear;
  if (s == "self_attention") return AdapterKind::self_attention;
  if (s == "mlp") return AdapterKind::mlp;
  throw ConfigError("unknown adapter kind \"" + std::string(s) + "\"");
}

AttentionMode parse_attention_mode(std::string_view s) {
  if (s == "scalar") return AttentionMode::scalar;
  if (s == "outer") return AttentionMode::outer;
  throw ConfigError("unknown attention mode \"" + std::string(s) + "\"");
}

InitScheme parse_init_scheme(std::string_view s) {
  if (s == "identity_perturbed") return InitScheme::identity_perturbed;
  if (s == "gaussian") return InitScheme::gaussian;
  throw ConfigError("unknown init scheme \"" + std::string(s) + "\"");
}

std::size_t matrix_count(AdapterKind kind) noexcept {
  switch (kind) {
    case AdapterKind::identity: return 0;
    case AdapterKind::linear: return 1;
    case AdapterKind::self_attention: return 3;
    case AdapterKind::mlp: return 2;
  }
  return 0;
}

std::size_t parameter_count(AdapterKind kind, std::size_t dim) noexcept {
  return matrix_count(kind) * dim * dim;
}

FlatParamView flatten(const AdapterParams& params) {
  FlatParamView view;
  view.values.reserve(params.parameter_count());
  for (const auto& m : params.matrices) {
    view.values.insert(view.values.end(), m.values().begin(), m.values().end());
  }
  return view;
}

AdapterParams unflatten(const FlatParamView& view, AdapterKind kind, std::size_t dim,
                        AttentionMode mode) {
  const std::size_t expected = parameter_count(kind, dim);
  if (view.size() != expected) {
    throw ContractViolation("unflatten: view has " + std::to_string(view.size()) +
                            " values, " + std::string(to_string(kind)) + " adapter of dim " +
                            std::to_string(dim) + " needs " + std::to_string(expected));
  }
  AdapterParams p{kind, mode, dim, {}};
  const std::size_t block = dim * dim;
  for (std::size_t i = 0; i < matrix_count(kind); ++i) {
    const auto first = view.values.begin() + static_cast<std::ptrdiff_t>(i * block);
    p.matrices.emplace_back(dim, dim, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(block)));
  }
  return p;
}

std::vector<std::size_t> segment_sizes(const AdapterParams& params) {
  std::vector<std::size_t> sizes;
  for (const auto& m : params.matrices) sizes.push_back(m.size());
  return sizes;
}

namespace {

DenseMatrix perturbed_identity(std::size_t dim, double epsilon, Rng& rng) {
  DenseMatrix m = DenseMatrix::identity(dim);
  if (epsilon != 0.0) {
    for (double& x : m.span()) x += epsilon * rng.normal();
  }
  return m;
}

DenseMatrix gaussian_matrix(std::size_t dim, Rng& rng) {
  DenseMatrix m(dim, dim);
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& x : m.span()) x = sd * rng.normal();
  return m;
}

void check_input(const AdapterParams& params, const DenseVector& input) {
  if (input.dim() != params.dim) {
    throw ContractViolation("adapter forward: input dim " + std::to_string(input.dim()) +
                            " != adapter dim " + std::to_string(params.dim));
  }
  if (params.matrices.size() != matrix_count(params.kind)) {
    throw ContractViolation("adapter forward: wrong matrix count for kind");
  }
}

}  // namespace

AdapterParams init_adapter(AdapterKind kind, std::size_t dim, std::uint64_t seed,
                           const InitOptions& options, AttentionMode mode) {
  if (dim < 1) throw ContractViolation("init_adapter: dim must be >= 1");
  AdapterParams p{kind, mode, dim, {}};
  for (std::size_t i = 0; i < matrix_count(kind); ++i) {
    Rng rng(derive_seed(seed, "adapter_init", i));
    const bool gaussian = options.scheme == InitScheme::gaussian ||
                          (kind == AdapterKind::self_attention && options.attention_gaussian);
    p.matrices.push_back(gaussian ? gaussian_matrix(dim, rng)
                                  : perturbed_identity(dim, options.epsilon, rng));
  }
  return p;
}

ForwardTrace forward_traced(const AdapterParams& params, const DenseVector& input) {
  check_input(params, input);
  ForwardTrace t;
  t.input = input;
  switch (params.kind) {
    case AdapterKind::identity:
      t.output = input;
      break;
    case AdapterKind::linear:
      t.output = matvec(params.matrices[0], input);
      break;
    case AdapterKind::mlp: {
      t.hidden = matvec(params.matrices[0], input);
      DenseVector act(t.hidden.dim());
      for (std::size_t i = 0; i < act.dim(); ++i) act[i] = t.hidden[i] > 0.0 ? t.hidden[i] : 0.0;
      t.output = matvec(params.matrices[1], act);
      break;
    }
    case AdapterKind::self_attention: {
      const std::size_t m = params.dim;
      const double scale = 1.0 / std::sqrt(static_cast<double>(m));
      t.query = matvec(params.matrices[0], input);
      t.key = matvec(params.matrices[1], input);
      t.value = matvec(params.matrices[2], input);
      if (params.attention_mode == AttentionMode::scalar) {
        // A single token attends only to itself.
        const DenseVector score{dot(t.query.span(), t.key.span()) * scale};
        const double alpha = softmax(score)[0];
        t.output = DenseVector(m);
        for (std::size_t i = 0; i < m; ++i) t.output[i] = alpha * t.value[i];
      } else {
        t.attention = DenseMatrix(m, m);
        t.output = DenseVector(m);
        DenseVector scores(m);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) scores[j] = t.query[i] * t.key[j] * scale;
          const auto alpha = softmax(scores);
          std::copy(alpha.begin(), alpha.end(), t.attention.row(i).begin());
          t.output[i] = dot(alpha.span(), t.value.span());
        }
      }
      break;
    }
  }
  return t;
}

DenseVector forward(const AdapterParams& params, const DenseVector& input) {
  return forward_traced(params, input).output;
}

void accumulate_backward(const AdapterParams& params, const ForwardTrace& trace,
                         const DenseVector& grad_output, double scale, FlatParamView& grad) {
  const std::size_t m = params.dim;
  const std::size_t block = m * m;
  if (grad.size() != params.parameter_count()) {
    throw ContractViolation("accumulate_backward: gradient buffer has wrong length");
  }
  if (grad_output.dim() != m) throw ContractViolation("accumulate_backward: dL/dA has wrong dim");

  // Adds scale · u vᵀ into matrix slot `slot` of the flat gradient.
  auto add_outer_flat = [&](std::size_t slot, const DenseVector& u, const DenseVector& v) {
    double* g = grad.values.data() + slot * block;
    for (std::size_t r = 0; r < m; ++r) {
      const double ur = scale * u[r];
      for (std::size_t c = 0; c < m; ++c) g[r * m + c] += ur * v[c];
    }
  };

  switch (params.kind) {
    case AdapterKind::identity:
      return;
    case AdapterKind::linear:
      add_outer_flat(0, grad_output, trace.input);
      return;
    case AdapterKind::mlp: {
      DenseVector act(m);
      for (std::size_t i = 0; i < m; ++i) act[i] = trace.hidden[i] > 0.0 ? trace.hidden[i] : 0.0;
      add_outer_flat(1, grad_output, act);
      DenseVector d_hidden = matvec_transposed(params.matrices[1], grad_output);
      for (std::size_t i = 0; i < m; ++i) {
        if (!(trace.hidden[i] > 0.0)) d_hidden[i] = 0.0;
      }
      add_outer_flat(0, d_hidden, trace.input);
      return;
    }
    case AdapterKind::self_attention: {
      if (params.attention_mode == AttentionMode::scalar) {
        // alpha is constant, so W_q and W_k receive exactly zero gradient.
        add_outer_flat(2, grad_output, trace.input);
        return;
      }
      const double s = 1.0 / std::sqrt(static_cast<double>(m));
      const DenseMatrix& alpha = trace.attention;
      DenseVector d_value = matvec_transposed(alpha, grad_output);
      DenseVector d_query(m);
      DenseVector d_key(m);
      for (std::size_t i = 0; i < m; ++i) {
        const auto a = alpha.row(i);
        const double gi = grad_output[i];
        const double ai = trace.output[i];
        double dq = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          // dS_ij = alpha_ij * g_i * (V_j - A_i)
          const double ds = a[j] * gi * (trace.value[j] - ai) * s;
          dq += ds * trace.key[j];
          d_key[j] += ds * trace.query[i];
        }
        d_query[i] = dq;
      }
      add_outer_flat(0, d_query, trace.input);
      add_outer_flat(1, d_key, trace.input);
      add_outer_flat(2, d_value, trace.input);
      return;
    }
  }
}

namespace {
constexpr char kCheckpointMagic[4] = {'C', 'A', 'D', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const AdapterParams& params) {
  if (params.matrices.size() != matrix_count(params.kind)) {
    throw ContractViolation("checkpoint: wrong matrix count for kind");
  }
  detail::ByteWriter w;
  w.raw(std::string_view(kCheckpointMagic, 4));
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(params.kind));
  w.u8(static_cast<std::uint8_t>(params.attention_mode));
  w.u32(static_cast<std::uint32_t>(params.dim));
  for (const auto& m : params.matrices) {
    if (m.rows() != params.dim || m.cols() != params.dim) {
      throw ContractViolation("checkpoint: matrix is not dim x dim");
    }
    for (const double x : m.values()) {
      if (!std::isfinite(static_cast<float>(x))) {
        throw ContractViolation("checkpoint: non-finite parameter");
      }
      w.f32(static_cast<float>(x));
    }
  }
  return w.bytes();
}

AdapterParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  const auto magic = r.raw(4, "header");
  if (magic != std::string_view(kCheckpointMagic, 4)) {
    throw FormatError("header", 0, "bad magic '" + magic + "', expected 'CADP'");
  }
  const auto version = r.u32("header");
  if (version != kCheckpointVersion) {
    throw FormatError("header", 4, "unsupported version " + std::to_string(version));
  }
  const auto kind_tag = r.u8("header");
  if (kind_tag > static_cast<std::uint8_t>(AdapterKind::mlp)) {
    throw FormatError("header", 8, "unknown adapter kind tag " + std::to_string(kind_tag));
  }
  const auto mode_tag = r.u8("header");
  if (mode_tag > static_cast<std::uint8_t>(AttentionMode::outer)) {
    throw FormatError("header", 9, "unknown attention mode tag " + std::to_string(mode_tag));
  }
  AdapterParams p;
  p.kind = static_cast<AdapterKind>(kind_tag);
  p.attention_mode = static_cast<AttentionMode>(mode_tag);
  p.dim = r.u32("header");
  for (std::size_t i = 0; i < matrix_count(p.kind); ++i) {
    DenseMatrix m(p.dim, p.dim);
    for (double& x : m.span()) {
      const auto at = r.offset();
      const float v = r.f32("matrices");
      if (!std::isfinite(v)) throw FormatError("matrices", at, "non-finite float");
      x = v;
    }
    p.matrices.push_back(std::move(m));
  }
  if (r.remaining() != 0) {
    throw FormatError("trailer", r.offset(), std::to_string(r.remaining()) + " unexpected trailing bytes");
  }
  return p;
}

void write_checkpoint(const AdapterParams& params, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_checkpoint(params));
}

AdapterParams read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file_bytes(path));
}

}  // namespace cladapt
