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
#include <map>
#include <set>

#include "fnorm/error.hpp"
#include "fnorm/training.hpp"
#include "oracles.hpp"

using namespace fnorm;
using ad::Tape;
using ad::Tensor;

namespace {

double scalar_log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double scalar_bce(const Matrix& z, const std::vector<NodePair>& pos,
                  const std::vector<NodePair>& neg, double lambda) {
  double loss = 0.0;
  auto dot_rows = [&](NodeId a, NodeId b) {
    double s = 0.0;
    for (std::size_t k = 0; k < z.cols(); ++k) s += z(a, k) * z(b, k);
    return s;
  };
  for (const auto& [a, b] : pos) loss -= scalar_log_sigmoid(dot_rows(a, b));
  for (const auto& [a, b] : neg) loss -= lambda * scalar_log_sigmoid(-dot_rows(a, b));
  return loss;
}

SnapshotSequence two_triangles() {
  const std::vector<Edge> e{{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}};
  const std::vector<std::size_t> fs(6, 0);
  return {build_snapshot(0, e, 6, fs), build_snapshot(1, e, 6, fs)};
}

TrainOptions small_options(Framework f) {
  TrainOptions o;
  o.model.framework = f;
  o.model.dim = 8;
  o.model.norm.variant = NormVariant::kNone;
  o.train_steps = {0, 1};
  o.epochs = 100;
  o.seed = 3;
  return o;
}

}  // namespace

TEST_CASE("negative sampler examples") {
  SUBCASE("only two candidates remain") {
    NegativeSampler s(1);
    s.add_positive(1, 0);
    CHECK(s.is_positive(0, 1));
    for (const NodePair& p : s.sample(2, 3))
      CHECK((p == NodePair{0, 2} || p == NodePair{1, 2}));
  }
  SUBCASE("k = 0 gives nothing") {
    NegativeSampler s(1);
    CHECK(s.sample(0, 10).empty());
  }
  SUBCASE("too few candidates") {
    NegativeSampler s(1);
    s.add_positive(0, 1);
    CHECK_THROWS_AS(s.sample(1, 2), ValidationError);
    CHECK_THROWS_AS(s.sample(1, 1), ValidationError);
    CHECK_THROWS_AS(NegativeSampler(1).sample(4, 3), ValidationError);
  }
}

TEST_CASE("negative sampler never returns a positive") {
  Rng rng(5);
  const Snapshot g = oracle::random_snapshot(100, 0.05, rng);
  NegativeSampler s(7);
  const auto links = g.link_pairs();
  s.add_positives(links);
  const std::set<NodePair> pos(links.begin(), links.end());
  for (const NodePair& p : s.sample(1000, 100)) {
    CHECK(p.first < p.second);
    CHECK(p.second < 100);
    CHECK(!pos.contains(p));
  }
}

TEST_CASE("negative sampler is uniform over candidates") {
  // 12 nodes, 66 pairs, 6 blocked: chi-square over the 60 candidates must
  // stay within three standard deviations of its expectation.
  NegativeSampler s(11);
  for (NodeId i = 0; i < 6; ++i) s.add_positive(i, i + 6);
  const std::size_t k = 60000;
  std::map<NodePair, std::size_t> counts;
  for (std::size_t round = 0; round < k / 60; ++round)
    for (const NodePair& p : s.sample(60, 12)) ++counts[p];
  std::size_t candidates = 0;
  double chi2 = 0.0;
  const double expected = static_cast<double>(k) / 60.0;
  for (NodeId i = 0; i < 12; ++i)
    for (NodeId j = i + 1; j < 12; ++j) {
      if (s.is_positive(i, j)) {
        CHECK(!counts.contains({i, j}));
        continue;
      }
      ++candidates;
      const double c = static_cast<double>(counts[{i, j}]);
      chi2 += (c - expected) * (c - expected) / expected;
    }
  REQUIRE(candidates == 60);
  const double df = 59.0;
  CHECK(std::abs(chi2 - df) < 3.0 * std::sqrt(2.0 * df));
}

TEST_CASE("negative sampler is deterministic") {
  NegativeSampler a(3), b(3);
  CHECK(a.sample(100, 50) == b.sample(100, 50));
}

TEST_CASE("bce loss examples") {
  Tape tape;
  const Tensor z = Tensor::constant(Matrix{{1, 0}, {0, 1}});
  const std::vector<NodePair> pair{{0, 1}};
  CHECK(bce_loss(tape, z, pair, {}, 1.0).value()(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(tape, z, {}, pair, 1.0).value()(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(bce_loss(tape, z, {}, pair, 0.0).value()(0, 0) == 0.0);
  const std::vector<NodePair> bad{{0, 2}};
  CHECK_THROWS_AS(bce_loss(tape, z, bad, {}, 1.0), ValidationError);
}

TEST_CASE("bce loss matches the scalar oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix z = oracle::random_matrix(10, 4, rng, 2.0);
    std::vector<NodePair> pos, neg;
    for (int k = 0; k < 8; ++k) {
      pos.push_back(canonical_pair(static_cast<NodeId>(rng.below(10)), static_cast<NodeId>(rng.below(10))));
      neg.push_back(canonical_pair(static_cast<NodeId>(rng.below(10)), static_cast<NodeId>(rng.below(10))));
    }
    const double lambda = 0.5 + rng.uniform();
    Tape tape;
    const double got = bce_loss(tape, Tensor::constant(z), pos, neg, lambda).value()(0, 0);
    const double want = scalar_bce(z, pos, neg, lambda);
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, want));
  }
}

TEST_CASE("bce loss stays finite for huge scores") {
  Tape tape;
  const Tensor z = Tensor::parameter(Matrix{{40, 0}, {-25, 0}, {25, 0}});
  const std::vector<NodePair> pos{{0, 1}}, neg{{0, 2}};
  const Tensor loss = bce_loss(tape, z, pos, neg, 1.0);
  CHECK(std::isfinite(loss.value()(0, 0)));
  CHECK(loss.value()(0, 0) == doctest::Approx(2000.0).epsilon(1e-12));
  tape.backward(loss);
  for (double g : z.grad().values()) CHECK(std::isfinite(g));
}

TEST_CASE("bce loss gradient matches finite differences") {
  Rng rng(2);
  Tensor z = Tensor::parameter(oracle::random_matrix(6, 3, rng));
  const std::vector<NodePair> pos{{0, 1}, {1, 2}, {3, 4}}, neg{{0, 5}, {2, 4}};
  {
    Tape tape;
    tape.backward(bce_loss(tape, z, pos, neg, 0.7));
  }
  const Matrix numeric = oracle::numeric_gradient(&z.mutable_value(), [&] {
    Tape tape;
    return bce_loss(tape, z, pos, neg, 0.7).value()(0, 0);
  });
  CHECK(oracle::relative_error(z.grad(), numeric) < 1e-4);
}

TEST_CASE("Adam matches a scalar reference") {
  AdamConfig cfg;
  cfg.lr = 0.05;
  cfg.weight_decay = 0.01;
  Tensor w = Tensor::parameter(Matrix{{2.0}});
  AdamOptimizer opt({w}, cfg);
  double p = 2.0, m = 0.0, v = 0.0;
  for (int t = 1; t <= 100; ++t) {
    const double g = 2.0 * (p - 0.5) + std::sin(t);
    w.mutable_grad() = Matrix{{2.0 * (w.value()(0, 0) - 0.5) + std::sin(t)}};
    opt.step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    p -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    p -= 0.05 * 0.01 * p;
    CHECK(std::abs(w.value()(0, 0) - p) < 1e-12);
    CHECK(w.grad()(0, 0) == 0.0);
  }
  CHECK(opt.step_count() == 100);
}

TEST_CASE("Adam edge behaviour") {
  SUBCASE("zero gradient without decay leaves parameters unchanged") {
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    Tensor w = Tensor::parameter(Matrix{{1.5, -2.0}});
    AdamOptimizer opt({w}, cfg);
    for (int i = 0; i < 10; ++i) opt.step();
    CHECK(w.value() == Matrix{{1.5, -2.0}});
  }
  SUBCASE("constant gradient moves each step by about lr") {
    AdamConfig cfg;
    cfg.weight_decay = 0.0;
    cfg.lr = 0.001;
    Tensor w = Tensor::parameter(Matrix{{0.0}});
    AdamOptimizer opt({w}, cfg);
    double prev = 0.0;
    for (int i = 0; i < 500; ++i) {
      prev = w.value()(0, 0);
      w.mutable_grad() = Matrix{{3.0}};
      opt.step();
    }
    CHECK(std::abs(std::abs(w.value()(0, 0) - prev) - cfg.lr) < 0.1 * cfg.lr);
  }
  SUBCASE("non-finite gradient aborts without touching parameters") {
    Tensor w = Tensor::parameter(Matrix{{1.0}});
    AdamOptimizer opt({w}, AdamConfig{});
    w.mutable_grad() = Matrix{{std::nan("")}};
    CHECK_THROWS_AS(opt.step(), NumericalError);
    CHECK(w.value() == Matrix{{1.0}});
  }
  SUBCASE("bad hyperparameters") {
    AdamConfig cfg;
    cfg.lr = 0.0;
    CHECK_THROWS_AS(AdamOptimizer({}, cfg), ValidationError);
  }
}

TEST_CASE("training beats the constant predictor on two triangles") {
  for (Framework f : {Framework::kDynGcn, Framework::kGruGcn}) {
    const TrainResult r = train(two_triangles(), small_options(f));
    // 6 positives and 6 negatives on each of the 2 steps.
    const double baseline = std::log(2.0) * 24.0;
    CHECK(r.epoch_losses.size() == 100);
    CHECK(r.best_loss < baseline);
    CHECK(r.best_loss == r.epoch_losses[r.best_epoch]);
    CHECK(r.log.size() == 200);
  }
}

TEST_CASE("training is deterministic") {
  TrainOptions o = small_options(Framework::kGruGcn);
  o.epochs = 20;
  o.model.norm.variant = NormVariant::kFeatureNorm;
  const TrainResult a = train(two_triangles(), o);
  const TrainResult b = train(two_triangles(), o);
  CHECK(a.epoch_losses == b.epoch_losses);
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
  const auto pa = a.best.parameters(), pb = b.best.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value() == pb[i].value());
  o.seed = 4;
  CHECK(train(two_triangles(), o).epoch_losses != a.epoch_losses);
}

TEST_CASE("training options") {
  const SnapshotSequence seq = two_triangles();
  TrainOptions o = small_options(Framework::kDynGcn);
  o.epochs = 3;
  SUBCASE("per-epoch updates and a longer window run") {
    o.update_mode = UpdateMode::kPerEpochSum;
    o.bptt_window = 2;
    const TrainResult r = train(seq, o);
    for (double l : r.epoch_losses) CHECK(std::isfinite(l));
  }
  SUBCASE("invalid options") {
    o.train_steps = {};
    CHECK_THROWS_AS(train(seq, o), ValidationError);
    o.train_steps = {1, 0};
    CHECK_THROWS_AS(train(seq, o), ValidationError);
    o.train_steps = {0, 5};
    CHECK_THROWS_AS(train(seq, o), ValidationError);
    o.train_steps = {0};
    o.epochs = 0;
    CHECK_THROWS_AS(train(seq, o), ValidationError);
  }
  SUBCASE("negatives exceeding the non-edge space") {
    o.per_positive = 3;  // 18 requested, 9 available
    CHECK_THROWS_AS(train(seq, o), ValidationError);
  }
}

TEST_CASE("inference reproduces eval-mode steps") {
  const SnapshotSequence seq = two_triangles();
  TrainOptions o = small_options(Framework::kDynGcn);
  o.epochs = 2;
  o.model.norm.variant = NormVariant::kFeatureNorm;
  const TrainResult r = train(seq, o);
  const std::vector<std::size_t> steps{0, 1};
  const auto z = infer_embeddings(r.best, seq, steps, o.seed);
  REQUIRE(z.size() == 2);
  CHECK(z[0].rows() == 6);
  CHECK(z == infer_embeddings(r.best, seq, steps, o.seed));
  for (std::size_t i = 0; i < 6; ++i)
    CHECK(std::abs(std::sqrt(squared_norm(z[1].row(i))) - 1.0) < 1e-12);
}
