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

#pragma once

#include <string>
#include <string_view>

#include "fnorm/autodiff.hpp"
#include "fnorm/matrix.hpp"

namespace fnorm {

enum class NormVariant { kNone, kFeatureNorm, kPairNorm, kPairNormSI };

// Order of the two FeatureNorm stages. kCenterThenNormalize is the default;
// the reverse order is kept for comparison runs.
enum class NormOrder { kCenterThenNormalize, kNormalizeThenCenter };

struct NormKind {
  NormVariant variant = NormVariant::kNone;
  double scale = 1.0;  // PairNorm target scale s; must be > 0
  NormOrder order = NormOrder::kCenterThenNormalize;
};

// Guard for zero rows / zero-scale matrices.
inline constexpr double kNormEps = 1e-12;

// Config spelling: none | fn | pn | pn-si.
NormVariant parse_norm_variant(std::string_view name);
std::string_view norm_variant_name(NormVariant v);
void validate(const NormKind& kind);

// Subtracts the column means.
ad::Tensor center(ad::Tape& tape, const ad::Tensor& z);
// Divides each row by max(||row||_2, eps).
ad::Tensor l2_row_normalize(ad::Tape& tape, const ad::Tensor& z,
                            double eps = kNormEps);
// l2_row_normalize(center(z)): rows land on the unit hypersphere.
ad::Tensor feature_norm(ad::Tape& tape, const ad::Tensor& z,
                        NormOrder order = NormOrder::kCenterThenNormalize);
// Centers, then rescales the whole matrix so that the mean squared row norm
// equals s^2.
ad::Tensor pair_norm(ad::Tape& tape, const ad::Tensor& z, double s = 1.0);
// Centers, then rescales each row to norm s.
ad::Tensor pair_norm_si(ad::Tape& tape, const ad::Tensor& z, double s = 1.0);

ad::Tensor apply_norm(ad::Tape& tape, const ad::Tensor& z,
                      const NormKind& kind);

// Value-only conveniences (no gradient tracking).
Matrix center(const Matrix& z);
Matrix l2_row_normalize(const Matrix& z, double eps = kNormEps);
Matrix feature_norm(const Matrix& z,
                    NormOrder order = NormOrder::kCenterThenNormalize);
Matrix pair_norm(const Matrix& z, double s = 1.0);
Matrix pair_norm_si(const Matrix& z, double s = 1.0);
Matrix apply_norm(const Matrix& z, const NormKind& kind);

}  // namespace fnorm
