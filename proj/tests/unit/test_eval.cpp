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

#include <doctest.h>

#include <cmath>

#include "fnorm/diagnostics.hpp"
#include "fnorm/error.hpp"
#include "fnorm/eval.hpp"
#include "oracles.hpp"

using namespace fnorm;

namespace {

std::vector<double> random_scores(std::size_t n, Rng& rng, int levels) {
  // Few distinct levels force plenty of ties.
  std::vector<double> s(n);
  for (double& v : s) v = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
  return s;
}

// Two blocks of 10 nodes. Step 0 holds every intra-block pair except the
// pairs (i, i + 5); step 1 holds exactly those held-out pairs.
SnapshotSequence planted_blocks() {
  std::vector<Edge> train, test;
  for (NodeId b = 0; b < 2; ++b)
    for (NodeId i = 0; i < 10; ++i)
      for (NodeId j = i + 1; j < 10; ++j) {
        const Edge e{b * 10 + i, b * 10 + j, 1.0};
        (j == i + 5 ? test : train).push_back(e);
      }
  const std::vector<std::size_t> fs(20, 0);
  return {build_snapshot(0, train, 20, fs), build_snapshot(1, test, 20, fs)};
}

Matrix block_embeddings() {
  Matrix z(20, 2);
  for (std::size_t i = 0; i < 20; ++i) z(i, i < 10 ? 0 : 1) = 1.0;
  return z;
}

}  // namespace

TEST_CASE("score_pairs") {
  const Matrix z{{1, 0}, {1, 0}, {0, 1}};
  const std::vector<NodePair> p{{0, 1}, {0, 2}};
  CHECK(score_pairs(z, p) == std::vector<double>{1.0, 0.0});
  const std::vector<NodePair> bad{{0, 3}};
  CHECK_THROWS_AS(score_pairs(z, bad), ValidationError);
}

TEST_CASE("auc and ap examples") {
  using V = std::vector<double>;
  CHECK(auc(V{0.9, 0.8}, V{0.7, 0.6}) == 1.0);
  CHECK(auc(V{0.9, 0.4}, V{0.5, 0.1}) == 0.75);
  CHECK(auc(V{0.5}, V{0.5}) == 0.5);
  CHECK(average_precision(V{0.9, 0.8}, V{0.7, 0.6}) == 1.0);
  CHECK(average_precision(V{0.9, 0.4}, V{0.5, 0.1}) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(average_precision(V{0.5}, V{0.5}) == 1.0);
  CHECK_THROWS_AS(auc(V{}, V{1.0}), ValidationError);
  CHECK_THROWS_AS(average_precision(V{1.0}, V{}), ValidationError);
  CHECK_THROWS_AS(auc(V{std::nan("")}, V{1.0}), NumericalError);
}

TEST_CASE("auc and ap equal brute-force oracles") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 1 + rng.below(200), n = 1 + rng.below(200);
    const int levels = trial % 2 == 0 ? 5 : 1000000;
    const auto pos = random_scores(p, rng, levels), neg = random_scores(n, rng, levels);
    CHECK(auc(pos, neg) == oracle::auc(pos, neg));
    CHECK(std::abs(average_precision(pos, neg) - oracle::average_precision(pos, neg)) < 1e-12);
  }
}

TEST_CASE("auc is invariant under strictly monotone maps") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> pos(30), neg(40);
    for (double& v : pos) v = std::round(8.0 * rng.normal()) / 4.0;
    for (double& v : neg) v = std::round(8.0 * rng.normal()) / 4.0;
    const double base = auc(pos, neg);
    auto mapped = [&](auto f) {
      std::vector<double> a = pos, b = neg;
      for (double& v : a) v = f(v);
      for (double& v : b) v = f(v);
      return auc(a, b);
    };
    CHECK(mapped([](double x) { return oracle::sigmoid(x); }) == base);
    CHECK(mapped([](double x) { return 3.0 * x - 7.0; }) == base);
  }
}

TEST_CASE("r_neg examples") {
  SUBCASE("identical unit rows give one") {
    const Matrix z(8, 3, 1.0 / std::sqrt(3.0));
    Rng rng(1);
    const Snapshot s = oracle::random_snapshot(8, 0.3, rng);
    CHECK(r_neg(z, s, 4).ratio == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("hand constructed ratio") {
    const Matrix z{{1, 0}, {0, 1}, {2, 0}, {1, 1}};
    const std::vector<NodePair> pos{{0, 1}, {0, 3}};  // 0 + 1
    const std::vector<NodePair> neg{{0, 2}, {2, 3}};  // 2 + 2
    const RNeg r = r_neg(z, pos, neg);
    CHECK(r.positive_smoothness == 1.0);
    CHECK(r.negative_smoothness == 4.0);
    CHECK(r.ratio == 4.0);
    CHECK(!r.undefined);
  }
  SUBCASE("zero positive smoothness is flagged") {
    const Matrix z{{1, 0}, {0, 1}};
    const std::vector<NodePair> pos{{0, 1}}, neg{{0, 0}};
    const RNeg r = r_neg(z, pos, neg);
    CHECK(r.undefined);
    CHECK(std::isnan(r.ratio));
  }
  SUBCASE("snapshot without links is rejected") {
    CHECK_THROWS_AS(r_neg(Matrix(3, 2, 1.0), build_snapshot(0, {}, 3), 1), ValidationError);
  }
}

TEST_CASE("planted two-block embeddings separate held-out edges") {
  const SnapshotSequence seq = planted_blocks();
  const MetricsReport r = evaluate_link_prediction({block_embeddings(), {1}, 1, true}, seq);
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].evaluated);
  CHECK(r.steps[0].num_positives == 10);
  CHECK(r.steps[0].num_negatives == 10);
  CHECK(r.mean_auc >= 0.95);
  CHECK(r.mean_ap >= 0.95);
  CHECK(r.mean_rneg < 0.05);
}

TEST_CASE("random embeddings sit at chance level") {
  Rng graph_rng(8);
  const std::vector<std::size_t> fs(200, 0);
  SnapshotSequence seq;
  for (std::size_t t = 0; t < 3; ++t) {
    const Snapshot g = oracle::random_snapshot(200, 0.03, graph_rng);
    seq.push_back(build_snapshot(t, {g.records().begin(), g.records().end()}, 200, fs));
  }
  double sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 101);
    const MetricsReport r = evaluate_link_prediction(
        {fnorm::random_matrix(200, 16, rng), {1, 2}, seed, true}, seq);
    sum += r.mean_auc;
  }
  CHECK(std::abs(sum / 5.0 - 0.5) < 0.05);
}

TEST_CASE("evaluation is deterministic and handles unseen nodes") {
  const SnapshotSequence seq = planted_blocks();
  Rng rng(2);
  const Matrix z = fnorm::random_matrix(20, 4, rng);
  const MetricsReport a = evaluate_link_prediction({z, {1}, 9, true}, seq);
  const MetricsReport b = evaluate_link_prediction({z, {1}, 9, true}, seq);
  CHECK(a.mean_auc == b.mean_auc);
  CHECK(a.mean_ap == b.mean_ap);
  CHECK(a.mean_rneg == b.mean_rneg);

  // Only the first block plus one node of the second is embedded: the
  // first block's 5 held-out pairs survive and the extra node leaves 10
  // never-linked pairs to sample from.
  Matrix half(11, 4);
  for (std::size_t i = 0; i < 11; ++i)
    for (std::size_t k = 0; k < 4; ++k) half(i, k) = z(i, k);
  const MetricsReport s = evaluate_link_prediction({half, {1}, 9, true}, seq);
  CHECK(s.total_skipped == 5);
  CHECK(s.steps[0].num_positives == 5);
  CHECK_THROWS_AS(evaluate_link_prediction({half, {1}, 9, false}, seq), ValidationError);
  CHECK_THROWS_AS(evaluate_link_prediction({z, {}, 9, true}, seq), ValidationError);
  CHECK_THROWS_AS(evaluate_link_prediction({z, {2}, 9, true}, seq), ValidationError);
}
