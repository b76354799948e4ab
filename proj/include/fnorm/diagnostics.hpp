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

#include <cstdint>
#include <string>
#include <vector>

#include "fnorm/graph.hpp"
#include "fnorm/matrix.hpp"
#include "fnorm/models.hpp"
#include "fnorm/rng.hpp"

namespace fnorm {

// ½ Σ_ij ã_ij ‖x_i − x_j‖² over the stored entries of a row-stochastic
// operator. Throws ValidationError for a symmetric-flavor operator.
double weighted_smoothness_distance(const Matrix& x,
                                    const NormalizedAdjacency& adj);

// One smoothing step Ã·x.
Matrix aggregate(const NormalizedAdjacency& adj, const Matrix& x);

// Σ_{i,j} ‖z_i − z_j‖² by the O(n²) double loop.
double total_pairwise_distance(const Matrix& z);
// Same quantity through 2n Σ‖z_i‖² − 2‖Σ z_i‖² (2n² − 2‖Σ z_i‖² for unit rows).
double pairwise_distance_identity(const Matrix& z);

struct Lemma1Result {
  // max_i ‖x_i − ∇D_i − Ã x_i‖∞ with ∇D_i = Σ_j ã_ij (x_i − x_j).
  double residual = 0.0;
  // The same gradient plugged into x̃_i − ∇D_i = x_i; not an identity.
  double printed_form_residual = 0.0;
};
Lemma1Result lemma1_check(const Matrix& x, const NormalizedAdjacency& adj);

inline constexpr std::size_t kLemma2MaxNodes = 200;

struct Lemma2Result {
  // Minimum of vᵀ S v over the samples, S = I + D^{1/2} P D^{-1/2}
  // (symmetric, similar to I + P).
  double min_form = 0.0;
  // Minimum of the Euclidean form vᵀ (I + P) v; may be negative.
  double raw_min_form = 0.0;
  std::size_t samples = 0;
};
// Samples unit vectors (the n standard basis vectors first, then random
// Gaussian directions). Throws ValidationError above kLemma2MaxNodes.
Lemma2Result lemma2_check(const NormalizedAdjacency& adj, std::uint64_t seed,
                          std::size_t samples = 1000);

// Erdős–Rényi G(n, p) as a single snapshot with unit weights.
Snapshot random_graph(std::size_t n, double p, Rng& rng);
Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng);

// Node count grows linearly from n_first to n_last; each step is an
// independent G(n_t, p) over the nodes present so far.
SnapshotSequence synthetic_sequence(std::size_t steps, std::size_t n_first,
                                    std::size_t n_last, double p,
                                    std::uint64_t seed);

struct Theorem1Config {
  std::size_t trials = 200;
  std::size_t max_nodes = 50;
  std::size_t max_dim = 8;
  std::vector<double> probabilities{0.1, 0.3, 0.6};
  double tolerance = 1e-9;  // relative
  std::uint64_t seed = 1;
};

struct Theorem1Trial {
  std::size_t trial = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  double p = 0.0;
  std::size_t num_edges = 0;
  double d_before = 0.0;              // D(x), self-loop row-stochastic weights
  double d_after = 0.0;               // D(Ãx)
  double d_before_transition = 0.0;   // same with D⁻¹A weights
  double d_after_transition = 0.0;
  bool violation = false;             // asserted weighting only
  bool transition_violation = false;  // reported only
  double lemma1_residual = 0.0;
  double lemma1_printed_residual = 0.0;
  double lemma2_min_form = 0.0;
  double lemma2_raw_min_form = 0.0;
};

struct Theorem1Report {
  std::vector<Theorem1Trial> trials;
  std::size_t violations = 0;
  std::size_t transition_violations = 0;
  double max_lemma1_residual = 0.0;
  double min_lemma2_form = 0.0;
  bool ok() const { return violations == 0; }
};

Theorem1Report theorem1_sweep(const Theorem1Config& cfg);

struct DistanceStep {
  std::size_t step = 0;  // 0-based snapshot index
  std::size_t num_nodes = 0;
  double d_plain = 0.0;  // D(H_t): transformation only
  double d_conv = 0.0;   // D(H̃_t): with aggregation
  double pairwise_conv = 0.0;  // Σ_ij ‖h̃_i − h̃_j‖²
  double max_row_norm_error = 0.0;  // max_i |‖h̃_i‖ − 1|, meaningful under fn
};

struct DistanceTrace {
  Framework framework = Framework::kDynGcn;
  NormVariant conv_norm = NormVariant::kNone;
  std::vector<DistanceStep> steps;
  double sum_plain = 0.0;
  double sum_conv = 0.0;
  // Per-step D(H̃_t) ≤ D(H_t) (1e-9 relative) and the summed form.
  bool per_step_holds = true;
  bool summed_holds = true;
};

// Runs the framework twice in eval mode from identical parameters and initial
// features: once with aggregation (optionally normalized) and once as
// transformation only, each arm carrying its own state. D is measured with
// the self-loop row-stochastic operator of each snapshot.
DistanceTrace corollary1_trace(const SnapshotSequence& seq,
                               Framework framework, std::uint64_t seed,
                               NormVariant conv_norm = NormVariant::kNone,
                               std::size_t dim = 32);

struct ScalingProbe {
  std::size_t n = 0;
  std::size_t dim = 0;
  double seconds_n = 0.0;
  double seconds_2n = 0.0;
  double ratio = 0.0;
};

// Times the value-level feature norm at n and 2n rows (minimum over
// `repetitions`).
ScalingProbe norm_scaling_probe(std::size_t n, std::size_t dim,
                                std::size_t repetitions, std::uint64_t seed);

}  // namespace fnorm
