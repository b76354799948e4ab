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
#include <filesystem>
#include <string>
#include <vector>

#include "fnorm/config.hpp"
#include "fnorm/diagnostics.hpp"
#include "fnorm/eval.hpp"
#include "fnorm/ingest.hpp"
#include "fnorm/training.hpp"

namespace fnorm {

// Worker count for per-seed parallelism: FNORM_THREADS if set (>= 1), else 1.
std::size_t worker_count();

// FNV-1a over (epoch, step, loss bits) of every log row; wall time excluded.
std::string log_hash(const std::vector<TrainLogRow>& log);

struct SeedEvaluation {
  std::uint64_t seed = 0;
  MetricsReport metrics;
  // R_neg of the embedding after each training step, against that step's
  // links; its mean is the headline smoothness ratio.
  std::vector<RNeg> train_rneg;
  double mean_train_rneg = 0.0;
};

// Recomputes embeddings through the training steps with `params` (eval
// mode), freezes them at the last training step and scores the test steps.
SeedEvaluation evaluate_seed(const ExperimentConfig& cfg,
                             const SnapshotSequence& seq, const Split& split,
                             const ModelState& params, std::uint64_t seed);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for one value
};
Aggregate aggregate_values(const std::vector<double>& values);

struct RunSummary {
  ExperimentConfig config;
  std::string config_hash;
  std::size_t num_steps = 0;
  Split split;
  std::vector<TrainResult> training;  // per seed, same order as config.seeds
  std::vector<SeedEvaluation> evaluations;
  Aggregate auc;
  Aggregate ap;
  Aggregate train_rneg;
  Aggregate test_rneg;
  std::string run_id;
};

// Reads, slices and persists a raw edge list.
SnapshotSequence run_slice(const std::filesystem::path& edge_list,
                           const std::filesystem::path& store,
                           const SliceConfig& cfg);

// Trains every seed and writes <out>/config.json,
// <out>/seed_<s>/checkpoint.fnck and <out>/seed_<s>/train_log.csv.
RunSummary run_train(const ExperimentConfig& cfg);

// Loads the checkpoints written by run_train and writes <out>/metrics.csv,
// <out>/curves.csv and <out>/summary.json.
RunSummary run_eval(const ExperimentConfig& cfg);

// Train and evaluate in memory. Writes nothing.
RunSummary run_experiment(const ExperimentConfig& cfg,
                          const SnapshotSequence& seq);

struct NormComparisonRow {
  Framework framework = Framework::kDynGcn;
  NormVariant norm = NormVariant::kNone;
  Aggregate auc;
  Aggregate ap;
  Aggregate train_rneg;
};

// Every framework in `frameworks` against none, fn, pn and pn-si under the
// same seeds and configuration; writes <out>/comparison.csv.
std::vector<NormComparisonRow> run_compare_norms(
    const ExperimentConfig& cfg, const std::vector<Framework>& frameworks);

struct DiagnoseOptions {
  std::string out_dir = "fnorm_diag";
  std::string dataset;  // optional snapshot store for the corollary trace
  std::uint64_t seed = 1;
  std::size_t theorem_trials = 200;
  std::size_t trace_sequences = 20;
  std::size_t trace_steps = 5;
  bool scaling = true;
  std::size_t scaling_n = 100000;
  std::size_t scaling_dim = 32;
};

struct DiagnoseSummary {
  Theorem1Report theorem1;
  std::vector<DistanceTrace> traces;
  ScalingProbe scaling;
  std::size_t trace_failures = 0;
  bool scaling_ok = true;
  bool ok() const {
    return theorem1.ok() && theorem1.max_lemma1_residual < 1e-10 &&
           theorem1.min_lemma2_form >= -1e-9 && trace_failures == 0 &&
           scaling_ok;
  }
};

inline constexpr double kScalingRatioLow = 1.3;
inline constexpr double kScalingRatioHigh = 3.0;

// Writes theorem1.csv, trace.csv, scaling.csv and diagnose.json.
DiagnoseSummary run_diagnose(const DiagnoseOptions& opts);

// JSON renderings used by the C API and the summary files.
std::string summary_json(const RunSummary& s);
std::string comparison_json(const std::vector<NormComparisonRow>& rows);
std::string diagnose_json(const DiagnoseSummary& s);

}  // namespace fnorm
