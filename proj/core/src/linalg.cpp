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

#include "cladapt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cladapt/errors.hpp"

namespace cladapt {
namespace {

void require_nonempty(const DenseVector& v, const char* op) {
  if (v.empty()) throw ContractViolation(std::string(op) + ": empty vector");
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ContractViolation("DenseMatrix: data length " + std::to_string(data_.size()) +
                            " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ContractViolation("DenseMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ContractViolation("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

DenseVector matvec(const DenseMatrix& m, const DenseVector& v) {
  if (m.cols() != v.dim()) {
    throw ContractViolation("matvec: matrix has " + std::to_string(m.cols()) +
                            " columns, vector has dim " + std::to_string(v.dim()));
  }
  DenseVector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v.span());
  return out;
}

DenseVector matvec_transposed(const DenseMatrix& m, const DenseVector& v) {
  if (m.rows() != v.dim()) {
    throw ContractViolation("matvec_transposed: matrix has " + std::to_string(m.rows()) +
                            " rows, vector has dim " + std::to_string(v.dim()));
  }
  DenseVector out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    const double w = v[r];
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += w * row[c];
  }
  return out;
}

void add_outer(DenseMatrix& out, std::span<const double> a, std::span<const double> b,
               double scale) {
  if (out.rows() != a.size() || out.cols() != b.size()) {
    throw ContractViolation("add_outer: shape mismatch");
  }
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = scale * a[r];
    auto row = out.row(r);
    for (std::size_t c = 0; c < b.size(); ++c) row[c] += ar * b[c];
  }
}

DenseVector softmax(const DenseVector& v) {
  require_nonempty(v, "softmax");
  const double mx = *std::max_element(v.begin(), v.end());
  DenseVector out(v.dim());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

DenseVector log_softmax(const DenseVector& v) {
  require_nonempty(v, "log_softmax");
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (const double x : v) sum += std::exp(x - mx);
  const double lse = mx + std::log(sum);
  DenseVector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] - lse;
  return out;
}

DenseVector l2_normalize(const DenseVector& v) {
  const double n = l2_norm(v.span());
  if (!(n > kNormEpsilon)) {
    throw DegenerateInput("l2_normalize: norm " + std::to_string(n) + " is below epsilon");
  }
  DenseVector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] / n;
  return out;
}

std::size_t argmax(const DenseVector& v) {
  require_nonempty(v, "argmax");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.dim(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

DenseMatrix normalize_rows(const DenseMatrix& m) {
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = l2_norm(m.row(r));
    if (!(n > kNormEpsilon)) {
      throw DegenerateInput("normalize_rows: row " + std::to_string(r) + " has near-zero norm");
    }
    auto dst = out.row(r);
    const auto src = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) dst[c] = src[c] / n;
  }
  return out;
}

bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace cladapt
