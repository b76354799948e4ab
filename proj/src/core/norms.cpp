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

#include "fnorm/norms.hpp"

#include <cmath>

#include "fnorm/error.hpp"
#include "fnorm/log.hpp"

namespace fnorm {
namespace {

Matrix column_means(const Matrix& z) {
  Matrix m(1, z.cols());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) m(0, j) += z(i, j);
  const double n = static_cast<double>(z.rows());
  for (double& v : m.values()) v /= n;
  return m;
}

Matrix center_values(const Matrix& z) {
  Matrix out = z;
  if (z.rows() == 0) return out;
  const Matrix mu = column_means(z);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) -= mu(0, j);
  return out;
}

// Per-row divisor max(||row||, eps).
std::vector<double> row_divisors(const Matrix& z, double eps) {
  std::vector<double> r(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i)
    r[i] = std::max(std::sqrt(squared_norm(z.row(i))), eps);
  return r;
}

// Divisor max(sqrt(mean_i ||z_i||^2), eps) for PairNorm.
double rms_row_norm(const Matrix& z, double eps) {
  double s = 0.0;
  for (double v : z.values()) s += v * v;
  return std::max(std::sqrt(s / static_cast<double>(z.rows())), eps);
}

void require_rows(const char* op, const Matrix& z) {
  if (z.rows() == 0) {
    throw ShapeError(std::string(op) + " requires at least one row");
  }
}

}  // namespace

NormVariant parse_norm_variant(std::string_view name) {
  if (name == "none") return NormVariant::kNone;
  if (name == "fn") return NormVariant::kFeatureNorm;
  if (name == "pn") return NormVariant::kPairNorm;
  if (name == "pn-si") return NormVariant::kPairNormSI;
  throw ValidationError("unknown norm '" + std::string(name) +
                        "' (expected none, fn, pn or pn-si)");
}

std::string_view norm_variant_name(NormVariant v) {
  switch (v) {
    case NormVariant::kNone: return "none";
    case NormVariant::kFeatureNorm: return "fn";
    case NormVariant::kPairNorm: return "pn";
    case NormVariant::kPairNormSI: return "pn-si";
  }
  return "none";
}

void validate(const NormKind& kind) {
  if (!(kind.scale > 0.0) || !std::isfinite(kind.scale)) {
    throw ValidationError("norm scale must be positive and finite");
  }
}

ad::Tensor center(ad::Tape& tape, const ad::Tensor& z) {
  require_rows("center", z.value());
  return tape.record(center_values(z.value()), {z},
                     [z](const Matrix& g) mutable {
                       ad::accumulate_grad(z, center_values(g));
                     });
}

ad::Tensor l2_row_normalize(ad::Tape& tape, const ad::Tensor& z, double eps) {
  require_rows("l2_row_normalize", z.value());
  const Matrix& x = z.value();
  const std::vector<double> r = row_divisors(x, eps);
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) y(i, j) = x(i, j) / r[i];
  return tape.record(y, {z}, [z, y, r, eps](const Matrix& g) mutable {
    // Unclamped rows: dx = (g - y <y, g>) / r. Clamped rows: dx = g / eps.
    Matrix gx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const bool clamped = r[i] <= eps;
      const double proj = clamped ? 0.0 : dot(y.row(i), g.row(i));
      for (std::size_t j = 0; j < g.cols(); ++j)
        gx(i, j) = (g(i, j) - y(i, j) * proj) / r[i];
    }
    ad::accumulate_grad(z, gx);
  });
}

ad::Tensor feature_norm(ad::Tape& tape, const ad::Tensor& z, NormOrder order) {
  if (order == NormOrder::kNormalizeThenCenter) {
    return center(tape, l2_row_normalize(tape, z));
  }
  return l2_row_normalize(tape, center(tape, z));
}

ad::Tensor pair_norm(ad::Tape& tape, const ad::Tensor& z, double s) {
  const ad::Tensor c = center(tape, z);
  const Matrix& x = c.value();
  const double rho = rms_row_norm(x, kNormEps);
  const bool clamped = rho <= kNormEps;
  const double n = static_cast<double>(x.rows());
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = s * x.data()[i] / rho;
  return tape.record(y, {c}, [c, rho, clamped, n, s](const Matrix& g) mutable {
    // y = s x / rho(x), rho = sqrt(sum x^2 / n):
    // dx = (s / rho) (g - x <g, x> / (n rho^2))
    const Matrix& x = c.value();
    double gx_dot = 0.0;
    if (!clamped)
      for (std::size_t i = 0; i < g.size(); ++i)
        gx_dot += g.data()[i] * x.data()[i];
    const double k = clamped ? 0.0 : gx_dot / (n * rho * rho);
    Matrix gx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i)
      gx.data()[i] = s / rho * (g.data()[i] - x.data()[i] * k);
    ad::accumulate_grad(c, gx);
  });
}

ad::Tensor pair_norm_si(ad::Tape& tape, const ad::Tensor& z, double s) {
  const ad::Tensor unit = l2_row_normalize(tape, center(tape, z));
  return s == 1.0 ? unit : ad::scale(tape, unit, s);
}

ad::Tensor apply_norm(ad::Tape& tape, const ad::Tensor& z,
                      const NormKind& kind) {
  switch (kind.variant) {
    case NormVariant::kNone: return z;
    case NormVariant::kFeatureNorm: return feature_norm(tape, z, kind.order);
    case NormVariant::kPairNorm: return pair_norm(tape, z, kind.scale);
    case NormVariant::kPairNormSI: return pair_norm_si(tape, z, kind.scale);
  }
  return z;
}

Matrix center(const Matrix& z) {
  require_rows("center", z);
  return center_values(z);
}

Matrix l2_row_normalize(const Matrix& z, double eps) {
  require_rows("l2_row_normalize", z);
  const std::vector<double> r = row_divisors(z, eps);
  Matrix y(z.rows(), z.cols());
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (r[i] <= eps) ++degenerate;
    for (std::size_t j = 0; j < z.cols(); ++j) y(i, j) = z(i, j) / r[i];
  }
  if (degenerate == z.rows() && z.rows() > 1) {
    log_warning("l2_row_normalize: every row is (near) zero; output is "
                "degenerate");
  }
  return y;
}

Matrix feature_norm(const Matrix& z, NormOrder order) {
  if (order == NormOrder::kNormalizeThenCenter) {
    return center(l2_row_normalize(z));
  }
  return l2_row_normalize(center(z));
}

Matrix pair_norm(const Matrix& z, double s) {
  Matrix c = center(z);
  const double rho = rms_row_norm(c, kNormEps);
  for (double& v : c.values()) v = s * v / rho;
  return c;
}

Matrix pair_norm_si(const Matrix& z, double s) {
  Matrix y = l2_row_normalize(center(z));
  if (s != 1.0)
    for (double& v : y.values()) v *= s;
  return y;
}

Matrix apply_norm(const Matrix& z, const NormKind& kind) {
  switch (kind.variant) {
    case NormVariant::kNone: return z;
    case NormVariant::kFeatureNorm: return feature_norm(z, kind.order);
    case NormVariant::kPairNorm: return pair_norm(z, kind.scale);
    case NormVariant::kPairNormSI: return pair_norm_si(z, kind.scale);
  }
  return z;
}

}  // namespace fnorm
