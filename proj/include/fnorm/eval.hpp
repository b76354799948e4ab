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
#include <span>
#include <vector>

#include "fnorm/graph.hpp"
#include "fnorm/matrix.hpp"

namespace fnorm {

// Raw inner products <z_i, z_j>. Throws ValidationError for indices outside
// the embedding.
std::vector<double> score_pairs(const Matrix& z, std::span<const NodePair> pairs);

// P(pos > neg) + ½ P(pos = neg), by sorting. Throws on empty inputs.
double auc(std::span<const double> pos, std::span<const double> neg);

// Mean precision at each positive hit over the list sorted by score
// (descending), ties broken positive-first. Throws on empty inputs.
double average_precision(std::span<const double> pos,
                         std::span<const double> neg);

struct RNeg {
  double ratio = 0.0;                 // n_s / p_s
  double positive_smoothness = 0.0;   // p_s
  double negative_smoothness = 0.0;   // n_s
  bool undefined = false;             // p_s == 0; ratio is NaN
};

// Summed similarities over the given positive and negative pairs.
RNeg r_neg(const Matrix& z, std::span<const NodePair> positives,
           std::span<const NodePair> negatives);
// Samples as many non-edges of the snapshot as it has links (nodes limited
// to the embedding rows). Throws if the snapshot has no link.
RNeg r_neg(const Matrix& z, const Snapshot& snapshot, std::uint64_t seed);

struct EvalTask {
  Matrix embeddings;                    // frozen at the last training step
  std::vector<std::size_t> test_steps;  // 0-based snapshot indices
  std::uint64_t seed = 1;
  bool skip_unseen = true;
};

struct StepMetrics {
  std::size_t step = 0;  // 0-based snapshot index
  bool evaluated = false;  // false when no positive survived filtering
  double auc = 0.0;
  double ap = 0.0;
  RNeg rneg;
  std::size_t num_positives = 0;
  std::size_t num_negatives = 0;
  std::size_t num_skipped = 0;  // positives touching unseen nodes
};

struct MetricsReport {
  std::vector<StepMetrics> steps;
  double mean_auc = 0.0;
  double mean_ap = 0.0;
  double mean_rneg = 0.0;
  std::size_t total_skipped = 0;
};

// Per test snapshot: positives are its links (transductive and new),
// negatives an equal number of uniformly sampled pairs never linked up to and
// including that snapshot. Deterministic for a fixed seed.
MetricsReport evaluate_link_prediction(const EvalTask& task,
                                       const SnapshotSequence& seq);

}  // namespace fnorm
