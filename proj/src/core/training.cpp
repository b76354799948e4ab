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

#include "fnorm/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "fnorm/error.hpp"

namespace fnorm {

NegativeSampler::NegativeSampler(std::uint64_t seed) : rng_(seed) {}

void NegativeSampler::add_positive(NodeId a, NodeId b) {
  if (a != b) seen_.insert(key(a, b));
}

void NegativeSampler::add_positives(std::span<const NodePair> pairs) {
  for (const auto& [a, b] : pairs) add_positive(a, b);
}

bool NegativeSampler::is_positive(NodeId a, NodeId b) const {
  return seen_.contains(key(a, b));
}

std::vector<NodePair> NegativeSampler::sample(std::size_t k, std::size_t n) {
  std::vector<NodePair> out;
  if (k == 0) return out;
  const std::uint64_t all_pairs =
      n < 2 ? 0 : static_cast<std::uint64_t>(n) * (n - 1) / 2;
  std::uint64_t blocked = 0;
  for (std::uint64_t key : seen_)
    if ((key >> 32) < n && (key & 0xffffffffULL) < n) ++blocked;
  if (all_pairs - blocked < k) {
    throw ValidationError("negative sampling: only " +
                          std::to_string(all_pairs - blocked) +
                          " non-edge pairs among " + std::to_string(n) +
                          " nodes, " + std::to_string(k) + " requested");
  }
  out.reserve(k);
  for (std::size_t s = 0; s < k; ++s) {
    std::size_t attempts = 0;
    while (true) {
      if (++attempts > kMaxSampleAttemptsPerPair) {
        throw NumericalError(
            "negative sampling gave up after " +
            std::to_string(kMaxSampleAttemptsPerPair) +
            " attempts (graph is nearly complete); request fewer negatives");
      }
      const auto i = static_cast<NodeId>(rng_.below(n));
      const auto j = static_cast<NodeId>(rng_.below(n));
      if (i == j || is_positive(i, j)) continue;
      out.push_back(canonical_pair(i, j));
      break;
    }
  }
  return out;
}

ad::Tensor bce_loss(ad::Tape& tape, const ad::Tensor& z,
                    std::span<const NodePair> positives,
                    std::span<const NodePair> negatives, double lambda_neg) {
  auto check = [&](std::span<const NodePair> pairs, const char* what) {
    for (const auto& [a, b] : pairs) {
      if (a >= z.rows() || b >= z.rows()) {
        throw ValidationError(std::string(what) + " pair (" +
                              std::to_string(a) + ", " + std::to_string(b) +
                              ") outside embedding with " +
                              std::to_string(z.rows()) + " rows");
      }
    }
  };
  check(positives, "positive");
  check(negatives, "negative");
  auto scores = [&](std::span<const NodePair> pairs) {
    std::vector<std::size_t> left, right;
    left.reserve(pairs.size());
    right.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
      left.push_back(a);
      right.push_back(b);
    }
    return ad::rowwise_dot(tape, ad::row_gather(tape, z, left),
                           ad::row_gather(tape, z, right));
  };
  ad::Tensor loss;
  if (!positives.empty()) {
    // -log σ(s)
    loss = ad::scale(tape, ad::sum(tape, ad::log_sigmoid(tape, scores(positives))),
                     -1.0);
  }
  if (!negatives.empty() && lambda_neg != 0.0) {
    // -λ log(1 - σ(s)) = -λ log σ(-s)
    ad::Tensor neg = ad::scale(
        tape,
        ad::sum(tape, ad::log_sigmoid(tape, ad::scale(tape, scores(negatives), -1.0))),
        -lambda_neg);
    loss = loss.defined() ? ad::add(tape, loss, neg) : neg;
  }
  if (!loss.defined()) loss = ad::Tensor::constant(Matrix(1, 1, 0.0));
  return loss;
}

AdamOptimizer::AdamOptimizer(std::vector<ad::Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0) || !(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) ||
      !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0) || !(cfg_.eps > 0.0) ||
      !(cfg_.weight_decay >= 0.0)) {
    throw ValidationError("invalid Adam hyperparameters");
  }
  for (const auto& p : params_) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void AdamOptimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void AdamOptimizer::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    for (double g : params_[k].grad().values()) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in parameter #" +
                             std::to_string(k) + " " +
                             params_[k].value().shape_string() +
                             " at optimizer step " + std::to_string(t_ + 1));
      }
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    double* p = params_[k].mutable_value().data();
    const double* g = params_[k].grad().data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < m_[k].size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      p[i] -= cfg_.lr * cfg_.weight_decay * p[i];
    }
  }
  zero_grad();
}

std::vector<std::shared_ptr<const NormalizedAdjacency>> normalized_adjacencies(
    const SnapshotSequence& seq) {
  std::vector<std::shared_ptr<const NormalizedAdjacency>> out;
  out.reserve(seq.size());
  for (const Snapshot& s : seq)
    out.push_back(std::make_shared<const NormalizedAdjacency>(symmetric_normalize(s)));
  return out;
}

void validate(const TrainOptions& opts, const SnapshotSequence& seq) {
  if (opts.train_steps.empty()) throw ValidationError("no training steps");
  for (std::size_t i = 0; i < opts.train_steps.size(); ++i) {
    if (opts.train_steps[i] >= seq.size()) {
      throw ValidationError("training step " +
                            std::to_string(opts.train_steps[i] + 1) +
                            " does not exist (sequence has " +
                            std::to_string(seq.size()) + " steps)");
    }
    if (i > 0 && opts.train_steps[i] <= opts.train_steps[i - 1]) {
      throw ValidationError("training steps must be strictly increasing");
    }
  }
  if (opts.epochs == 0) throw ValidationError("epochs must be >= 1");
  if (opts.bptt_window == 0) throw ValidationError("bptt window must be >= 1");
  if (opts.per_positive == 0) throw ValidationError("per_positive must be >= 1");
  if (!(opts.loss_lambda >= 0.0)) throw ValidationError("loss lambda must be >= 0");
}

TrainResult train(const SnapshotSequence& seq, const TrainOptions& opts) {
  validate(opts, seq);
  Rng param_rng(derive_seed(opts.seed, Stream::kParameters));
  ModelState state = make_model(opts.model, param_rng);
  AdamOptimizer adam(state.parameters(), opts.adam);
  Rng dropout_rng(derive_seed(opts.seed, Stream::kDropout));
  NegativeSampler sampler(derive_seed(opts.seed, Stream::kNegatives));
  const auto adjs = normalized_adjacencies(seq);

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  using Clock = std::chrono::steady_clock;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    state.reset_hidden();
    sampler.clear_positives();
    Rng feature_rng(derive_seed(opts.seed, Stream::kFeatures));
    ad::Tape tape;
    ad::Tensor window_loss;
    std::size_t in_window = 0;
    double epoch_loss = 0.0;

    for (std::size_t k = 0; k < opts.train_steps.size(); ++k) {
      const std::size_t t = opts.train_steps[k];
      const auto start = Clock::now();
      const Snapshot& snap = seq[t];
      const std::vector<NodePair> positives = snap.link_pairs();
      sampler.add_positives(positives);
      const std::vector<NodePair> negatives =
          sampler.sample(opts.per_positive * positives.size(), snap.num_nodes());

      const bool last = k + 1 == opts.train_steps.size();
      const bool closes_window = last || in_window + 1 >= opts.bptt_window;
      StepOptions so;
      so.train = true;
      so.keep_graph = !closes_window;
      const ad::Tensor z = step(tape, state, adjs[t], feature_rng, dropout_rng, so);
      const ad::Tensor loss =
          bce_loss(tape, z, positives, negatives, opts.loss_lambda);
      const double lv = loss.value()(0, 0);
      if (!std::isfinite(lv)) {
        throw NumericalError("non-finite loss at epoch " +
                             std::to_string(epoch) + ", step " +
                             std::to_string(t + 1));
      }
      epoch_loss += lv;
      if (loss.requires_grad()) {
        window_loss = window_loss.defined() ? ad::add(tape, window_loss, loss)
                                            : loss;
      }
      ++in_window;
      if (closes_window) {
        if (window_loss.defined()) tape.backward(window_loss);
        tape.clear();
        window_loss = ad::Tensor();
        in_window = 0;
        if (opts.update_mode == UpdateMode::kPerStep) adam.step();
      }
      const double ms =
          std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      result.log.push_back({epoch, t, lv, ms});
    }
    if (opts.update_mode == UpdateMode::kPerEpochSum) adam.step();

    result.epoch_losses.push_back(epoch_loss);
    if (epoch_loss < result.best_loss) {
      result.best_loss = epoch_loss;
      result.best_epoch = epoch;
      result.best = clone_parameters(state);
    }
  }
  return result;
}

std::vector<Matrix> infer_embeddings(const ModelState& params,
                                     const SnapshotSequence& seq,
                                     std::span<const std::size_t> steps,
                                     std::uint64_t seed) {
  ModelState state = clone_parameters(params);
  Rng feature_rng(derive_seed(seed, Stream::kFeatures));
  Rng unused_dropout(0);
  std::vector<Matrix> out;
  out.reserve(steps.size());
  for (std::size_t t : steps) {
    if (t >= seq.size()) {
      throw ValidationError("inference step " + std::to_string(t + 1) +
                            " does not exist");
    }
    ad::Tape tape;
    auto adj = std::make_shared<const NormalizedAdjacency>(symmetric_normalize(seq[t]));
    const ad::Tensor z = step(tape, state, adj, feature_rng, unused_dropout, {});
    out.push_back(z.value());
  }
  return out;
}

}  // namespace fnorm
