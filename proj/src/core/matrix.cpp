/*
 * Copyright 2026 The fnorm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fnorm/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace fnorm {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix of shape " + fnorm::shape_string(rows_, cols_) +
                     " cannot hold " + std::to_string(data_.size()) +
                     " values");
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::append_rows(const Matrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
  if (other.cols_ != cols_) {
    throw ShapeError("cannot append rows of shape " + other.shape_string() +
                     " to " + shape_string());
  }
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

std::string Matrix::shape_string() const {
  return fnorm::shape_string(rows_, cols_);
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + a.shape_string() + " * " +
                     b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t k_dim = a.cols();
  const std::size_t m = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.data() + i * m;
    const double* ai = a.data() + i * k_dim;
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double aik = ai[k];
      const double* bk = b.data() + k * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += aik * bk[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("max_abs_diff shape mismatch: " + a.shape_string() +
                     " vs " + b.shape_string());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace fnorm
