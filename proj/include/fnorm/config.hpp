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
#include <string_view>
#include <vector>

#include "fnorm/models.hpp"
#include "fnorm/training.hpp"

namespace fnorm {

enum class SplitMode { kRatio80, kRatio60, kExplicit };

// Everything needed to reproduce a run. Step lists are 1-based, as written
// by users; the rest of the library is 0-based.
struct ExperimentConfig {
  std::string dataset;  // snapshot store directory
  std::size_t slice_target = 2000;
  Framework framework = Framework::kDynGcn;
  NormKind norm;
  std::size_t dim = 32;
  double dropout = 0.25;
  std::size_t epochs = 100;
  double lr = 0.01;
  double weight_decay = 5e-7;
  double loss_lambda = 1.0;
  std::size_t per_positive = 1;
  SplitMode split = SplitMode::kRatio80;
  std::vector<std::size_t> train_steps;  // explicit split only
  std::vector<std::size_t> test_steps;   // explicit split only
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t bptt_window = 1;
  UpdateMode update_mode = UpdateMode::kPerStep;
  bool skip_unseen = true;
  std::string out_dir = "fnorm_out";
};

// Keys, in JSON and on the command line (as --key):
//   dataset slice-target framework norm norm-scale norm-order dim dropout
//   epochs lr weight-decay loss-lambda per-positive split train-steps
//   test-steps seeds bptt-window update-mode skip-unseen out-dir
const std::vector<std::string>& config_keys();

// Parses `value` as the textual form of `key` ("1,2,5-7" for lists,
// true/false for flags). Throws ValidationError on unknown keys or values.
void set_option(ExperimentConfig& cfg, std::string_view key,
                std::string_view value);

std::string to_json(const ExperimentConfig& cfg);
// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

void validate(const ExperimentConfig& cfg);

// 16 hex digits of FNV-1a over the canonical (sorted-key) JSON, out-dir
// excluded.
std::string config_hash(const ExperimentConfig& cfg);

struct Split {
  std::vector<std::size_t> train;  // 0-based
  std::vector<std::size_t> test;   // 0-based
};

// ratio80 / ratio60: the first floor(r·T) steps train, the rest test.
// Throws ValidationError when either side would be empty or, for explicit
// lists, when they overlap, are unordered or reference missing steps.
Split compute_split(const ExperimentConfig& cfg, std::size_t num_steps);

TrainOptions train_options(const ExperimentConfig& cfg,
                           std::vector<std::size_t> train_steps,
                           std::uint64_t seed);

std::string_view split_mode_name(SplitMode m);
std::string_view update_mode_name(UpdateMode m);

}  // namespace fnorm
