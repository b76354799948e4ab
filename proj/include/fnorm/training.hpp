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
#include <memory>
#include <span>
#include <unordered_set>
#include <vector>

#include "fnorm/autodiff.hpp"
#include "fnorm/graph.hpp"
#include "fnorm/models.hpp"

namespace fnorm {

inline constexpr std::size_t kMaxSampleAttemptsPerPair = 100000;

// Uniform sampler over unordered non-loop node pairs that have never been
// observed as links. Samples with replacement.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::uint64_t seed);

  void add_positive(NodeId a, NodeId b);
  void add_positives(std::span<const NodePair> pairs);
  bool is_positive(NodeId a, NodeId b) const;
  std::size_t num_positive_pairs() const noexcept { return seen_.size(); }
  void clear_positives() { seen_.clear(); }

  // k pairs (i, j), i < j < n, none of them a recorded positive. Throws
  // ValidationError when fewer than k candidate pairs exist, NumericalError
  // when the per-pair attempt budget runs out.
  std::vector<NodePair> sample(std::size_t k, std::size_t n);

 private:
  static std::uint64_t key(NodeId a, NodeId b) {
    const NodePair p = canonical_pair(a, b);
    return (static_cast<std::uint64_t>(p.first) << 32) | p.second;
  }
  std::unordered_set<std::uint64_t> seen_;
  Rng rng_;
};

// Σ_pos -log σ(<z_i, z_j>) - λ Σ_neg log(1 - σ(<z_i, z_j>)), evaluated with
// log-sigmoid so that it stays finite for large scores. Returns 1x1.
ad::Tensor bce_loss(ad::Tape& tape, const ad::Tensor& z,
                    std::span<const NodePair> positives,
                    std::span<const NodePair> negatives, double lambda_neg);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-7;  // decoupled: p -= lr * wd * p after the step
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<ad::Tensor> params, AdamConfig cfg);

  // Bias-corrected Adam update from the accumulated gradients, followed by
  // decoupled weight decay; gradients are zeroed afterwards. Throws
  // NumericalError (leaving parameters untouched) on a non-finite gradient.
  void step();
  void zero_grad();

  std::size_t step_count() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  std::vector<ad::Tensor> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

enum class UpdateMode { kPerStep, kPerEpochSum };

struct TrainOptions {
  ModelSpec model;
  std::vector<std::size_t> train_steps;  // 0-based snapshot indices, ascending
  std::size_t epochs = 100;
  AdamConfig adam;
  double loss_lambda = 1.0;
  std::size_t per_positive = 1;
  // Number of consecutive steps a gradient may flow through before the
  // carried state is detached.
  std::size_t bptt_window = 1;
  UpdateMode update_mode = UpdateMode::kPerStep;
  std::uint64_t seed = 1;
};

struct TrainLogRow {
  std::size_t epoch = 0;
  std::size_t step = 0;  // 0-based snapshot index
  double loss = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  ModelState best;  // parameters of the lowest-loss epoch
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
  std::vector<double> epoch_losses;
  std::vector<TrainLogRow> log;
};

void validate(const TrainOptions& opts, const SnapshotSequence& seq);

// Sequential training. Every epoch restarts the carried state from the same
// initial node features, walks the training snapshots in order, resamples
// negatives and updates the shared parameters.
TrainResult train(const SnapshotSequence& seq, const TrainOptions& opts);

std::vector<std::shared_ptr<const NormalizedAdjacency>> normalized_adjacencies(
    const SnapshotSequence& seq);

// Eval-mode forward pass over `steps` (in order) from the initial features
// derived from `seed`; returns the embedding after each step.
std::vector<Matrix> infer_embeddings(const ModelState& params,
                                     const SnapshotSequence& seq,
                                     std::span<const std::size_t> steps,
                                     std::uint64_t seed);

}  // namespace fnorm
