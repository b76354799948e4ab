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

#include "fnorm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fnorm/error.hpp"

namespace fnorm {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ValidationError("--" + std::string(key) + ": expected a non-negative integer, got '" + t + "'");
  }
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() ||
      !std::isfinite(v)) {
    throw ValidationError("--" + std::string(key) + ": expected a finite number, got '" + t + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ValidationError("--" + std::string(key) + ": expected true or false, got '" + t + "'");
}

// "1,2,5-7" -> {1, 2, 5, 6, 7}
std::vector<std::uint64_t> parse_list(std::string_view key,
                                      std::string_view text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item(trim(text.substr(pos, comma == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : comma - pos)));
    if (item.empty()) {
      throw ValidationError("--" + std::string(key) + ": empty list item in '" +
                            std::string(text) + "'");
    }
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(parse_u64(key, item));
    } else {
      const auto lo = parse_u64(key, item.substr(0, dash));
      const auto hi = parse_u64(key, item.substr(dash + 1));
      if (hi < lo || hi - lo > 1000000) {
        throw ValidationError("--" + std::string(key) + ": bad range '" + item + "'");
      }
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string_view order_name(NormOrder o) {
  return o == NormOrder::kNormalizeThenCenter ? "normalize_then_center"
                                              : "center_then_normalize";
}

std::string list_text(const auto& values) {
  std::string s;
  for (const auto v : values) {
    if (!s.empty()) s += ',';
    s += std::to_string(v);
  }
  return s;
}

json to_json_value(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  j["slice-target"] = c.slice_target;
  j["framework"] = framework_name(c.framework);
  j["norm"] = norm_variant_name(c.norm.variant);
  j["norm-scale"] = c.norm.scale;
  j["norm-order"] = order_name(c.norm.order);
  j["dim"] = c.dim;
  j["dropout"] = c.dropout;
  j["epochs"] = c.epochs;
  j["lr"] = c.lr;
  j["weight-decay"] = c.weight_decay;
  j["loss-lambda"] = c.loss_lambda;
  j["per-positive"] = c.per_positive;
  j["split"] = split_mode_name(c.split);
  j["train-steps"] = c.train_steps;
  j["test-steps"] = c.test_steps;
  j["seeds"] = c.seeds;
  j["bptt-window"] = c.bptt_window;
  j["update-mode"] = update_mode_name(c.update_mode);
  j["skip-unseen"] = c.skip_unseen;
  j["out-dir"] = c.out_dir;
  return j;
}

}  // namespace

std::string_view split_mode_name(SplitMode m) {
  switch (m) {
    case SplitMode::kRatio80: return "ratio80";
    case SplitMode::kRatio60: return "ratio60";
    case SplitMode::kExplicit: return "explicit";
  }
  return "ratio80";
}

std::string_view update_mode_name(UpdateMode m) {
  return m == UpdateMode::kPerEpochSum ? "per-epoch" : "per-step";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "dataset",      "slice-target", "framework",   "norm",
      "norm-scale",   "norm-order",   "dim",         "dropout",
      "epochs",       "lr",           "weight-decay", "loss-lambda",
      "per-positive", "split",        "train-steps", "test-steps",
      "seeds",        "bptt-window",  "update-mode", "skip-unseen",
      "out-dir"};
  return keys;
}

void set_option(ExperimentConfig& c, std::string_view key,
                std::string_view value) {
  const std::string v = trim(value);
  if (key == "dataset") {
    c.dataset = v;
  } else if (key == "slice-target") {
    c.slice_target = parse_u64(key, v);
  } else if (key == "framework") {
    c.framework = parse_framework(v);
  } else if (key == "norm") {
    c.norm.variant = parse_norm_variant(v);
  } else if (key == "norm-scale") {
    c.norm.scale = parse_double(key, v);
  } else if (key == "norm-order") {
    if (v == "center_then_normalize") {
      c.norm.order = NormOrder::kCenterThenNormalize;
    } else if (v == "normalize_then_center") {
      c.norm.order = NormOrder::kNormalizeThenCenter;
    } else {
      throw ValidationError("--norm-order: expected center_then_normalize or normalize_then_center, got '" + v + "'");
    }
  } else if (key == "dim") {
    c.dim = parse_u64(key, v);
  } else if (key == "dropout") {
    c.dropout = parse_double(key, v);
  } else if (key == "epochs") {
    c.epochs = parse_u64(key, v);
  } else if (key == "lr") {
    c.lr = parse_double(key, v);
  } else if (key == "weight-decay") {
    c.weight_decay = parse_double(key, v);
  } else if (key == "loss-lambda") {
    c.loss_lambda = parse_double(key, v);
  } else if (key == "per-positive") {
    c.per_positive = parse_u64(key, v);
  } else if (key == "split") {
    if (v == "ratio80") {
      c.split = SplitMode::kRatio80;
    } else if (v == "ratio60") {
      c.split = SplitMode::kRatio60;
    } else if (v == "explicit") {
      c.split = SplitMode::kExplicit;
    } else {
      throw ValidationError("--split: expected ratio80, ratio60 or explicit, got '" + v + "'");
    }
  } else if (key == "train-steps" || key == "test-steps") {
    const auto list = parse_list(key, v);
    auto& dst = key == "train-steps" ? c.train_steps : c.test_steps;
    dst.assign(list.begin(), list.end());
    c.split = SplitMode::kExplicit;
  } else if (key == "seeds") {
    c.seeds = parse_list(key, v);
  } else if (key == "bptt-window") {
    c.bptt_window = parse_u64(key, v);
  } else if (key == "update-mode") {
    if (v == "per-step") {
      c.update_mode = UpdateMode::kPerStep;
    } else if (v == "per-epoch") {
      c.update_mode = UpdateMode::kPerEpochSum;
    } else {
      throw ValidationError("--update-mode: expected per-step or per-epoch, got '" + v + "'");
    }
  } else if (key == "skip-unseen") {
    c.skip_unseen = parse_bool(key, v);
  } else if (key == "out-dir") {
    c.out_dir = v;
  } else {
    throw ValidationError("unknown configuration key '" + std::string(key) + "'");
  }
}

std::string to_json(const ExperimentConfig& cfg) {
  return to_json_value(cfg).dump(2);
}

ExperimentConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentConfig c;
  // Apply keys in a fixed order so that list keys can switch the split mode
  // before an explicit "split" entry overrides it.
  for (const std::string& key : config_keys()) {
    if (key == "split") continue;
    if (!j.contains(key)) continue;
    const json& v = j.at(key);
    std::string text_value;
    if (v.is_string()) {
      text_value = v.get<std::string>();
    } else if (v.is_array()) {
      if (key == "train-steps" || key == "test-steps") {
        if (v.empty()) continue;
      }
      std::vector<std::uint64_t> items;
      for (const json& e : v) {
        if (!e.is_number_unsigned()) {
          throw ValidationError("config key '" + key + "' must list non-negative integers");
        }
        items.push_back(e.get<std::uint64_t>());
      }
      if (items.empty()) throw ValidationError("config key '" + key + "' is empty");
      text_value = list_text(items);
    } else if (v.is_boolean()) {
      text_value = v.get<bool>() ? "true" : "false";
    } else if (v.is_number()) {
      text_value = v.dump();
    } else {
      throw ValidationError("config key '" + key + "' has an unsupported type");
    }
    set_option(c, key, text_value);
  }
  if (j.contains("split")) {
    if (!j.at("split").is_string()) throw ValidationError("config key 'split' must be a string");
    set_option(c, "split", j.at("split").get<std::string>());
  }
  for (const auto& [key, _] : j.items()) {
    if (std::find(config_keys().begin(), config_keys().end(), key) ==
        config_keys().end()) {
      throw ValidationError("unknown configuration key '" + key + "'");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void validate(const ExperimentConfig& c) {
  if (c.slice_target == 0) throw ValidationError("slice-target must be >= 1");
  validate(c.norm);
  if (c.dim == 0) throw ValidationError("dim must be >= 1");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
  if (c.epochs == 0) throw ValidationError("epochs must be >= 1");
  if (!(c.lr > 0.0)) throw ValidationError("lr must be > 0");
  if (!(c.weight_decay >= 0.0)) throw ValidationError("weight-decay must be >= 0");
  if (!(c.loss_lambda >= 0.0)) throw ValidationError("loss-lambda must be >= 0");
  if (c.per_positive == 0) throw ValidationError("per-positive must be >= 1");
  if (c.seeds.empty()) throw ValidationError("seeds must not be empty");
  for (std::size_t i = 0; i < c.seeds.size(); ++i)
    for (std::size_t j = i + 1; j < c.seeds.size(); ++j)
      if (c.seeds[i] == c.seeds[j])
        throw ValidationError("seed " + std::to_string(c.seeds[i]) + " listed twice");
  if (c.bptt_window == 0) throw ValidationError("bptt-window must be >= 1");
  if (c.out_dir.empty()) throw ValidationError("out-dir must not be empty");
  if (c.split == SplitMode::kExplicit &&
      (c.train_steps.empty() || c.test_steps.empty())) {
    throw ValidationError("explicit split needs both train-steps and test-steps");
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  // The output location does not affect results.
  auto j = to_json_value(cfg);
  j.erase("out-dir");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Split compute_split(const ExperimentConfig& cfg, std::size_t num_steps) {
  Split s;
  if (cfg.split == SplitMode::kExplicit) {
    auto convert = [&](const std::vector<std::size_t>& in, const char* what) {
      std::vector<std::size_t> out;
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == 0 || in[i] > num_steps) {
          throw ValidationError(std::string(what) + " step " + std::to_string(in[i]) +
                                " is outside 1.." + std::to_string(num_steps));
        }
        if (i > 0 && in[i] <= in[i - 1]) {
          throw ValidationError(std::string(what) + " steps must be strictly increasing");
        }
        out.push_back(in[i] - 1);
      }
      if (out.empty()) throw ValidationError(std::string(what) + " steps are empty");
      return out;
    };
    s.train = convert(cfg.train_steps, "train");
    s.test = convert(cfg.test_steps, "test");
    for (std::size_t t : s.test) {
      if (std::find(s.train.begin(), s.train.end(), t) != s.train.end()) {
        throw ValidationError("step " + std::to_string(t + 1) +
                              " is in both the train and the test split");
      }
    }
    if (s.test.front() <= s.train.back()) {
      throw ValidationError("test steps must come after every train step");
    }
    return s;
  }
  const std::size_t tenths = cfg.split == SplitMode::kRatio80 ? 8 : 6;
  const std::size_t n_train = num_steps * tenths / 10;
  if (n_train == 0 || n_train >= num_steps) {
    throw ValidationError("a " + std::string(split_mode_name(cfg.split)) + " split of " +
                          std::to_string(num_steps) +
                          " step(s) leaves no train or no test steps");
  }
  for (std::size_t t = 0; t < num_steps; ++t)
    (t < n_train ? s.train : s.test).push_back(t);
  return s;
}

TrainOptions train_options(const ExperimentConfig& cfg,
                           std::vector<std::size_t> train_steps,
                           std::uint64_t seed) {
  TrainOptions o;
  o.model.framework = cfg.framework;
  o.model.norm = cfg.norm;
  o.model.dim = cfg.dim;
  o.model.dropout = cfg.dropout;
  o.train_steps = std::move(train_steps);
  o.epochs = cfg.epochs;
  o.adam.lr = cfg.lr;
  o.adam.weight_decay = cfg.weight_decay;
  o.loss_lambda = cfg.loss_lambda;
  o.per_positive = cfg.per_positive;
  o.bptt_window = cfg.bptt_window;
  o.update_mode = cfg.update_mode;
  o.seed = seed;
  return o;
}

}  // namespace fnorm
