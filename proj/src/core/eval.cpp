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

#include "fnorm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fnorm/error.hpp"
#include "fnorm/rng.hpp"
#include "fnorm/training.hpp"

namespace fnorm {

namespace {

void require_nonempty(std::span<const double> pos, std::span<const double> neg,
                      const char* what) {
  if (pos.empty() || neg.empty()) {
    throw ValidationError(std::string(what) + " needs at least one positive and one negative score (got " +
                          std::to_string(pos.size()) + " and " +
                          std::to_string(neg.size()) + ")");
  }
  for (double s : pos)
    if (std::isnan(s)) throw NumericalError(std::string(what) + ": NaN score");
  for (double s : neg)
    if (std::isnan(s)) throw NumericalError(std::string(what) + ": NaN score");
}

double pair_score(const Matrix& z, const NodePair& p) {
  if (p.first >= z.rows() || p.second >= z.rows()) {
    throw ValidationError("pair (" + std::to_string(p.first) + ", " +
                          std::to_string(p.second) +
                          ") outside embedding with " +
                          std::to_string(z.rows()) + " rows");
  }
  return dot(z.row(p.first), z.row(p.second));
}

}  // namespace

std::vector<double> score_pairs(const Matrix& z,
                                std::span<const NodePair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const NodePair& p : pairs) out.push_back(pair_score(z, p));
  return out;
}

double auc(std::span<const double> pos, std::span<const double> neg) {
  require_nonempty(pos, neg, "auc");
  std::vector<double> p(pos.begin(), pos.end());
  std::vector<double> n(neg.begin(), neg.end());
  std::sort(p.begin(), p.end());
  std::sort(n.begin(), n.end());
  // Twice the Mann-Whitney U, kept integral until the final division.
  std::uint64_t twice_u = 0;
  std::size_t below = 0, upto = 0;
  for (double s : p) {
    while (below < n.size() && n[below] < s) ++below;
    if (upto < below) upto = below;
    while (upto < n.size() && n[upto] <= s) ++upto;
    twice_u += 2 * below + (upto - below);
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(p.size()) * static_cast<double>(n.size()));
}

double average_precision(std::span<const double> pos,
                         std::span<const double> neg) {
  require_nonempty(pos, neg, "average_precision");
  std::vector<std::pair<double, bool>> ranked;
  ranked.reserve(pos.size() + neg.size());
  for (double s : pos) ranked.emplace_back(s, true);
  for (double s : neg) ranked.emplace_back(s, false);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second && !b.second;
  });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!ranked[k].second) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(pos.size());
}

RNeg r_neg(const Matrix& z, std::span<const NodePair> positives,
           std::span<const NodePair> negatives) {
  RNeg r;
  for (const NodePair& p : positives) r.positive_smoothness += pair_score(z, p);
  for (const NodePair& p : negatives) r.negative_smoothness += pair_score(z, p);
  if (r.positive_smoothness == 0.0) {
    r.undefined = true;
    r.ratio = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.ratio = r.negative_smoothness / r.positive_smoothness;
  }
  return r;
}

RNeg r_neg(const Matrix& z, const Snapshot& snapshot, std::uint64_t seed) {
  std::vector<NodePair> positives;
  for (const NodePair& p : snapshot.link_pairs())
    if (p.first < z.rows() && p.second < z.rows()) positives.push_back(p);
  if (positives.empty()) {
    throw ValidationError("r_neg: snapshot " + std::to_string(snapshot.index() + 1) +
                          " has no link among the embedded nodes");
  }
  NegativeSampler sampler(seed);
  sampler.add_positives(positives);
  const auto negatives = sampler.sample(positives.size(), z.rows());
  return r_neg(z, positives, negatives);
}

MetricsReport evaluate_link_prediction(const EvalTask& task,
                                       const SnapshotSequence& seq) {
  const Matrix& z = task.embeddings;
  if (z.rows() == 0) throw ValidationError("evaluation needs a non-empty embedding");
  if (task.test_steps.empty()) throw ValidationError("no test steps to evaluate");
  for (std::size_t t : task.test_steps) {
    if (t >= seq.size()) {
      throw ValidationError("test step " + std::to_string(t + 1) +
                            " does not exist (sequence has " +
                            std::to_string(seq.size()) + " steps)");
    }
  }

  // Cumulative positives: every link up to and including the test step.
  NegativeSampler sampler(derive_seed(task.seed, Stream::kEvaluation));
  std::size_t absorbed = 0;

  MetricsReport report;
  double sum_auc = 0.0, sum_ap = 0.0, sum_rneg = 0.0;
  std::size_t n_eval = 0, n_rneg = 0;
  for (std::size_t t : task.test_steps) {
    for (; absorbed <= t; ++absorbed) sampler.add_positives(seq[absorbed].link_pairs());

    StepMetrics m;
    m.step = t;
    std::vector<NodePair> positives;
    for (const NodePair& p : seq[t].link_pairs()) {
      const bool unseen = p.first >= z.rows() || p.second >= z.rows();
      if (!unseen) {
        positives.push_back(p);
      } else if (task.skip_unseen) {
        ++m.num_skipped;
      } else {
        throw ValidationError(
            "test step " + std::to_string(t + 1) + " links node " +
            std::to_string(std::max(p.first, p.second)) +
            " that has no embedding; enable skip_unseen to exclude it");
      }
    }
    report.total_skipped += m.num_skipped;
    m.num_positives = positives.size();
    if (!positives.empty()) {
      const auto negatives = sampler.sample(positives.size(), z.rows());
      m.num_negatives = negatives.size();
      const auto ps = score_pairs(z, positives);
      const auto ns = score_pairs(z, negatives);
      m.evaluated = true;
      m.auc = auc(ps, ns);
      m.ap = average_precision(ps, ns);
      m.rneg = r_neg(z, positives, negatives);
      sum_auc += m.auc;
      sum_ap += m.ap;
      ++n_eval;
      if (!m.rneg.undefined) {
        sum_rneg += m.rneg.ratio;
        ++n_rneg;
      }
    }
    report.steps.push_back(m);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  report.mean_auc = n_eval ? sum_auc / static_cast<double>(n_eval) : nan;
  report.mean_ap = n_eval ? sum_ap / static_cast<double>(n_eval) : nan;
  report.mean_rneg = n_rneg ? sum_rneg / static_cast<double>(n_rneg) : nan;
  return report;
}

}  // namespace fnorm
