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

// Command-line front end over the C API.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fnorm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitCheckFailed = 3;

const std::vector<std::string> kConfigKeys{
    "dataset",      "slice-target", "framework",    "norm",
    "norm-scale",   "norm-order",   "dim",          "dropout",
    "epochs",       "lr",           "weight-decay", "loss-lambda",
    "per-positive", "split",        "train-steps",  "test-steps",
    "seeds",        "bptt-window",  "update-mode",  "skip-unseen",
    "out-dir"};

int exit_code(fnorm_status s) {
  switch (s) {
    case FNORM_OK: return kExitOk;
    case FNORM_ERR_NUMERICAL: return kExitNumerical;
    case FNORM_ERR_CHECK_FAILED: return kExitCheckFailed;
    default: return kExitInput;
  }
}

int report_failure(fnorm_status s) {
  std::fprintf(stderr, "fnorm: %s: %s\n", fnorm_status_name(s), fnorm_last_error());
  return exit_code(s);
}

void print_and_free(fnorm_report* report) {
  if (report) {
    std::printf("%s\n", fnorm_report_json(report));
    fnorm_report_free(report);
  }
}

struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON config file")
        ->check(CLI::ExistingFile);
    for (const std::string& key : kConfigKeys)
      cmd->add_option("--" + key, values[key], "override '" + key + "'");
  }

  // Base config: --config, else <out-dir>/config.json when `reuse_out_dir`
  // and it exists, else defaults. Flags given on the command line win.
  fnorm_status build(CLI::App* cmd, bool reuse_out_dir, fnorm_config** out) {
    fnorm_status s = FNORM_OK;
    std::string base = config_file;
    if (base.empty() && reuse_out_dir && cmd->count("--out-dir") > 0) {
      const auto candidate = std::filesystem::path(values["out-dir"]) / "config.json";
      if (std::filesystem::exists(candidate)) base = candidate.string();
    }
    s = base.empty() ? fnorm_config_new(out) : fnorm_config_load(base.c_str(), out);
    if (s != FNORM_OK) return s;
    for (const std::string& key : kConfigKeys) {
      if (cmd->count("--" + key) == 0) continue;
      s = fnorm_config_set(*out, key.c_str(), values[key].c_str());
      if (s != FNORM_OK) return s;
    }
    return fnorm_config_validate(*out);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FeatureNorm dynamic graph embedding toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fnorm_version()));

  auto* slice_cmd = app.add_subcommand("slice", "Slice a temporal edge list into a snapshot store");
  std::string input, store;
  std::size_t target = 2000, max_steps = 0;
  bool no_day_rule = false;
  slice_cmd->add_option("--input", input, "KONECT-style edge list")->required()->check(CLI::ExistingFile);
  slice_cmd->add_option("--out", store, "snapshot store directory")->required();
  slice_cmd->add_option("--slice-target", target, "records per snapshot")->check(CLI::PositiveNumber);
  slice_cmd->add_option("--max-steps", max_steps, "drop records beyond this many steps (0 = all)");
  slice_cmd->add_flag("--no-day-rule", no_day_rule, "cut exactly at the target count");

  ConfigFlags train_flags, eval_flags, compare_flags;
  auto* train_cmd = app.add_subcommand("train", "Train every seed and write checkpoints");
  train_flags.attach(train_cmd);
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate the checkpoints under --out-dir");
  eval_flags.attach(eval_cmd);
  auto* compare_cmd = app.add_subcommand("compare-norms", "Train none/fn/pn/pn-si side by side");
  compare_flags.attach(compare_cmd);
  std::string frameworks;
  compare_cmd->add_option("--frameworks", frameworks, "comma-separated frameworks (default: both)");

  auto* diag_cmd = app.add_subcommand("diagnose", "Smoothness inequalities, lemma checks and norm scaling");
  std::string diag_out = "fnorm_diag", diag_dataset;
  std::uint64_t diag_seed = 1;
  std::size_t trials = 200, sequences = 20, steps = 5, scaling_n = 100000;
  bool no_scaling = false;
  diag_cmd->add_option("--out-dir", diag_out, "output directory");
  diag_cmd->add_option("--dataset", diag_dataset, "snapshot store for the distance trace");
  diag_cmd->add_option("--seed", diag_seed, "seed");
  diag_cmd->add_option("--theorem-trials", trials, "random graphs in the inequality sweep");
  diag_cmd->add_option("--trace-sequences", sequences, "synthetic sequences for the trace");
  diag_cmd->add_option("--trace-steps", steps, "steps per synthetic sequence");
  diag_cmd->add_option("--scaling-n", scaling_n, "rows for the norm timing probe");
  diag_cmd->add_flag("--no-scaling", no_scaling, "skip the timing probe");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInput;
  }

  fnorm_status s = FNORM_OK;
  fnorm_report* report = nullptr;

  if (*slice_cmd) {
    fnorm_edge_list* edges = nullptr;
    fnorm_snapshots* seq = nullptr;
    s = fnorm_edge_list_load(input.c_str(), &edges);
    if (s == FNORM_OK) s = fnorm_slice(edges, target, no_day_rule ? 0 : 1, max_steps, &seq);
    if (s == FNORM_OK) s = fnorm_snapshots_save(seq, store.c_str());
    if (s == FNORM_OK) {
      const std::size_t n = fnorm_snapshots_count(seq);
      std::size_t nodes = 0, total_records = 0;
      for (std::size_t t = 0; t < n; ++t) {
        std::size_t nn = 0, rec = 0;
        fnorm_snapshots_step_info(seq, t, &nn, &rec, nullptr);
        nodes = nn;
        total_records += rec;
        std::printf("step %zu: nodes=%zu records=%zu\n", t + 1, nn, rec);
      }
      std::printf("steps=%zu nodes=%zu records=%zu dropped=%zu\n", n, nodes,
                  total_records, fnorm_edge_list_num_records(edges) - total_records);
    }
    fnorm_snapshots_free(seq);
    fnorm_edge_list_free(edges);
    return s == FNORM_OK ? kExitOk : report_failure(s);
  }

  if (*diag_cmd) {
    nlohmann::json o{{"out-dir", diag_out},       {"seed", diag_seed},
                     {"theorem-trials", trials},  {"trace-sequences", sequences},
                     {"trace-steps", steps},      {"scaling", !no_scaling},
                     {"scaling-n", scaling_n}};
    if (!diag_dataset.empty()) o["dataset"] = diag_dataset;
    const std::string opts = o.dump();
    s = fnorm_diagnose(opts.c_str(), &report);
    print_and_free(report);
    return s == FNORM_OK ? kExitOk : report_failure(s);
  }

  fnorm_config* cfg = nullptr;
  if (*train_cmd) {
    s = train_flags.build(train_cmd, false, &cfg);
    if (s == FNORM_OK) s = fnorm_train(cfg, &report);
  } else if (*eval_cmd) {
    s = eval_flags.build(eval_cmd, true, &cfg);
    if (s == FNORM_OK) s = fnorm_eval(cfg, &report);
  } else if (*compare_cmd) {
    s = compare_flags.build(compare_cmd, false, &cfg);
    if (s == FNORM_OK)
      s = fnorm_compare_norms(cfg, frameworks.empty() ? nullptr : frameworks.c_str(), &report);
  }
  fnorm_config_free(cfg);
  print_and_free(report);
  return s == FNORM_OK ? kExitOk : report_failure(s);
}
