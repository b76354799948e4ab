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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fnorm/error.hpp"
#include "fnorm/experiment.hpp"

using namespace fnorm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("fnorm_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig quick_config(const fs::path& store, const fs::path& out) {
  ExperimentConfig c;
  c.dataset = store.string();
  c.out_dir = out.string();
  c.epochs = 5;
  c.dim = 8;
  c.seeds = {1, 2};
  c.norm.variant = NormVariant::kFeatureNorm;
  return c;
}

}  // namespace

TEST_CASE("aggregate values") {
  const Aggregate a = aggregate_values({1.0, 2.0, 3.0});
  CHECK(a.mean == 2.0);
  CHECK(a.stddev == doctest::Approx(1.0));
  CHECK(aggregate_values({4.0}).stddev == 0.0);
}

TEST_CASE("slice, train and evaluate the two-block fixture") {
  TempDir tmp("pipeline");
  const fs::path store = tmp.path / "store";
  SliceConfig sc;
  sc.target_edges_per_slice = 45;
  const SnapshotSequence seq = run_slice(fs::path(FNORM_FIXTURE_DIR) / "two_blocks.edges", store, sc);
  REQUIRE(seq.size() == 8);
  CHECK(load_snapshots(store) == seq);

  const ExperimentConfig cfg = quick_config(store, tmp.path / "run");
  const RunSummary trained = run_train(cfg);
  CHECK(trained.training.size() == 2);
  CHECK(!trained.run_id.empty());
  for (const char* f : {"config.json", "seed_1/checkpoint.fnck", "seed_1/train_log.csv",
                        "seed_2/checkpoint.fnck", "seed_2/train_log.csv"})
    CHECK(fs::exists(tmp.path / "run" / f));
  const std::string log = read(tmp.path / "run" / "seed_1" / "train_log.csv");
  CHECK(log.rfind("# config=", 0) == 0);
  CHECK(log.find("epoch,step,loss,wall_ms") != std::string::npos);

  const RunSummary evaluated = run_eval(cfg);
  CHECK(evaluated.evaluations.size() == 2);
  CHECK(evaluated.split.train.size() == 6);
  CHECK(evaluated.split.test.size() == 2);
  CHECK(evaluated.auc.mean >= 0.0);
  CHECK(evaluated.auc.mean <= 1.0);
  for (const char* f : {"metrics.csv", "curves.csv", "summary.json"})
    CHECK(fs::exists(tmp.path / "run" / f));
  CHECK(read(tmp.path / "run" / "summary.json").find(config_hash(cfg)) != std::string::npos);

  SUBCASE("evaluation rejects a mismatched configuration") {
    ExperimentConfig other = cfg;
    other.dim = 16;
    CHECK_THROWS(run_eval(other));
  }
  SUBCASE("in-memory runs are deterministic") {
    const RunSummary a = run_experiment(cfg, seq);
    const RunSummary b = run_experiment(cfg, seq);
    CHECK(a.auc.mean == b.auc.mean);
    CHECK(a.ap.mean == b.ap.mean);
    CHECK(a.run_id == b.run_id);
    CHECK(a.training[0].epoch_losses == trained.training[0].epoch_losses);
    CHECK(log_hash(a.training[1].log) == log_hash(trained.training[1].log));
  }
}

TEST_CASE("norm comparison table") {
  TempDir tmp("compare");
  const fs::path store = tmp.path / "store";
  SliceConfig sc;
  sc.target_edges_per_slice = 45;
  run_slice(fs::path(FNORM_FIXTURE_DIR) / "two_blocks.edges", store, sc);
  ExperimentConfig cfg = quick_config(store, tmp.path / "cmp");
  cfg.epochs = 3;
  cfg.seeds = {1};
  const auto rows = run_compare_norms(cfg, {Framework::kDynGcn, Framework::kGruGcn});
  REQUIRE(rows.size() == 8);
  for (std::size_t f = 0; f < 2; ++f) {
    CHECK(rows[4 * f].norm == NormVariant::kNone);
    CHECK(rows[4 * f + 1].norm == NormVariant::kFeatureNorm);
    CHECK(rows[4 * f + 2].norm == NormVariant::kPairNorm);
    CHECK(rows[4 * f + 3].norm == NormVariant::kPairNormSI);
    // PN-SI at unit scale is the feature norm.
    CHECK(rows[4 * f + 3].auc.mean == rows[4 * f + 1].auc.mean);
  }
  CHECK(fs::exists(tmp.path / "cmp" / "comparison.csv"));
}

TEST_CASE("missing datasets are reported as IO errors") {
  ExperimentConfig c;
  c.dataset = "/nonexistent/store";
  c.out_dir = (fs::temp_directory_path() / "fnorm_test_missing").string();
  CHECK_THROWS_AS(run_train(c), IoError);
  fs::remove_all(c.out_dir);
}
