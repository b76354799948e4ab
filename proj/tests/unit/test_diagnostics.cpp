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
#include "oracles.hpp"

using namespace fnorm;

namespace {

// ½ Σ_{i≠j} ã_ij ‖x_i − x_j‖² over the dense row-stochastic operator.
double dense_distance(const oracle::Dense& a, const Matrix& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (i == j) continue;
      double sq = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) sq += (x(i, k) - x(j, k)) * (x(i, k) - x(j, k));
      s += a[i][j] * sq;
    }
  return 0.5 * s;
}

}  // namespace

TEST_CASE("weighted smoothness distance examples") {
  const Snapshot k2 = build_snapshot(0, {{0, 1, 1.0}}, 2);
  const NormalizedAdjacency a = row_normalize(k2);
  const Matrix x{{0}, {2}};
  CHECK(weighted_smoothness_distance(x, a) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(aggregate(a, x) == Matrix{{1}, {1}});
  CHECK(weighted_smoothness_distance(aggregate(a, x), a) == 0.0);
  CHECK_THROWS_AS(weighted_smoothness_distance(x, symmetric_normalize(k2)), ValidationError);
}

TEST_CASE("weighted smoothness distance matches the dense oracle") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Snapshot s = oracle::random_snapshot(3 + rng.below(20), 0.3, rng, true);
    const Matrix x = oracle::random_matrix(s.num_nodes(), 3, rng);
    const double got = weighted_smoothness_distance(x, row_normalize(s));
    const double want = dense_distance(oracle::row_normalized(s), x);
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, want));
  }
}

TEST_CASE("repeated aggregation drives the distance toward zero") {
  Rng rng(9);
  Snapshot s = oracle::random_snapshot(15, 0.4, rng);
  const NormalizedAdjacency a = row_normalize(s);
  Matrix x = oracle::random_matrix(15, 4, rng);
  const double start = weighted_smoothness_distance(x, a);
  double prev = start;
  for (int k = 0; k < 200; ++k) {
    x = aggregate(a, x);
    const double d = weighted_smoothness_distance(x, a);
    // Absolute slack covers rounding once the distance reaches ~1e-30.
    CHECK(d <= prev * (1.0 + 1e-9) + 1e-25 * start);
    prev = d;
  }
  CHECK(prev < 1e-6 * start);
}

TEST_CASE("lemma checks") {
  SUBCASE("K2 residual") {
    const Snapshot k2 = build_snapshot(0, {{0, 1, 1.0}}, 2);
    const Lemma1Result r = lemma1_check(Matrix{{0, 0}, {2, 2}}, transition_normalize(k2));
    CHECK(r.residual < 1e-12);
  }
  SUBCASE("random graphs") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const Snapshot s = oracle::random_snapshot(4 + rng.below(30), 0.25, rng, true);
      const NormalizedAdjacency p = transition_normalize(s);
      CHECK(lemma1_check(oracle::random_matrix(s.num_nodes(), 5, rng), p).residual < 1e-12);
      const Lemma2Result l2 = lemma2_check(p, trial, 200);
      CHECK(l2.samples == 200);
      CHECK(l2.min_form >= -1e-12);
    }
  }
  SUBCASE("lemma2 size limit") {
    Rng rng(1);
    const Snapshot big = random_graph(kLemma2MaxNodes + 1, 0.01, rng);
    CHECK_THROWS_AS(lemma2_check(transition_normalize(big), 1), ValidationError);
  }
}

TEST_CASE("pairwise distance identity") {
  Rng rng(6);
  const Matrix z = random_matrix(40, 5, rng);
  const double brute = total_pairwise_distance(z);
  CHECK(std::abs(brute - pairwise_distance_identity(z)) < 1e-10 * brute);
  CHECK(total_pairwise_distance(Matrix{{1, 0}, {0, 1}}) == doctest::Approx(4.0));
}

TEST_CASE("synthetic sequences") {
  const SnapshotSequence seq = synthetic_sequence(5, 10, 30, 0.2, 3);
  REQUIRE(seq.size() == 5);
  CHECK(seq.front().num_nodes() == 10);
  CHECK(seq.back().num_nodes() == 30);
  CHECK_NOTHROW(validate_sequence(seq));
  const SnapshotSequence again = synthetic_sequence(5, 10, 30, 0.2, 3);
  CHECK(seq == again);
}

TEST_CASE("theorem sweep on a small budget") {
  Theorem1Config cfg;
  cfg.trials = 30;
  cfg.max_nodes = 25;
  const Theorem1Report r = theorem1_sweep(cfg);
  CHECK(r.trials.size() == 30);
  CHECK(r.ok());
  CHECK(r.max_lemma1_residual < 1e-10);
  CHECK(r.min_lemma2_form >= -1e-9);
  for (const Theorem1Trial& t : r.trials) {
    CHECK(t.n >= 2);
    CHECK(t.n <= 25);
    CHECK(t.d_after <= t.d_before * (1.0 + cfg.tolerance) + 1e-300);
  }
}

TEST_CASE("distance traces") {
  const SnapshotSequence seq = synthetic_sequence(5, 20, 40, 0.15, 7);
  for (Framework f : {Framework::kDynGcn, Framework::kGruGcn}) {
    const DistanceTrace plain = corollary1_trace(seq, f, 1);
    REQUIRE(plain.steps.size() == 5);
    CHECK(plain.per_step_holds);
    CHECK(plain.summed_holds);
    double sum_conv = 0.0;
    for (const DistanceStep& s : plain.steps) {
      CHECK(s.d_conv <= s.d_plain * (1.0 + 1e-9));
      sum_conv += s.d_conv;
    }
    CHECK(sum_conv == doctest::Approx(plain.sum_conv));

    const DistanceTrace fn = corollary1_trace(seq, f, 1, NormVariant::kFeatureNorm);
    for (const DistanceStep& s : fn.steps) {
      const double n = static_cast<double>(s.num_nodes);
      CHECK(s.max_row_norm_error < 1e-9);
      CHECK(s.pairwise_conv >= 0.9 * 2.0 * n * n);
      CHECK(s.pairwise_conv <= 2.0 * n * n * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("scaling probe reports both sizes") {
  const ScalingProbe p = norm_scaling_probe(2000, 8, 2, 1);
  CHECK(p.n == 2000);
  CHECK(p.seconds_n > 0.0);
  CHECK(p.seconds_2n > 0.0);
  CHECK(p.ratio == doctest::Approx(p.seconds_2n / p.seconds_n));
}
