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

#include "fnorm.h"

#include <cstring>
#include <exception>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fnorm/config.hpp"
#include "fnorm/error.hpp"
#include "fnorm/eval.hpp"
#include "fnorm/experiment.hpp"
#include "fnorm/ingest.hpp"
#include "fnorm/log.hpp"
#include "fnorm/norms.hpp"

struct fnorm_report {
  std::string json;
};
struct fnorm_edge_list {
  fnorm::TemporalEdgeList value;
};
struct fnorm_snapshots {
  fnorm::SnapshotSequence value;
};
struct fnorm_config {
  fnorm::ExperimentConfig value;
};

namespace {

thread_local std::string g_last_error;

fnorm_status fail(fnorm_status s, const std::string& message) {
  g_last_error = message;
  return s;
}

// Maps the exception in flight to a status code.
fnorm_status translate() {
  try {
    throw;
  } catch (const fnorm::Error& e) {
    switch (e.kind()) {
      case fnorm::ErrorKind::kValidation: return fail(FNORM_ERR_VALIDATION, e.what());
      case fnorm::ErrorKind::kShape: return fail(FNORM_ERR_SHAPE, e.what());
      case fnorm::ErrorKind::kIo: return fail(FNORM_ERR_IO, e.what());
      case fnorm::ErrorKind::kNumerical: return fail(FNORM_ERR_NUMERICAL, e.what());
      case fnorm::ErrorKind::kUnsupported: return fail(FNORM_ERR_UNSUPPORTED, e.what());
    }
    return fail(FNORM_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FNORM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FNORM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FNORM_ERR_INTERNAL, "unknown error");
  }
}

template <typename Fn>
fnorm_status guarded(Fn fn) {
  g_last_error.clear();
  try {
    return fn();
  } catch (...) {
    return translate();
  }
}

#define FNORM_REQUIRE(cond, what) \
  if (!(cond)) return fail(FNORM_ERR_VALIDATION, what)

fnorm_status emit(std::string json, fnorm_report** out) {
  *out = new fnorm_report{std::move(json)};
  return FNORM_OK;
}

}  // namespace

extern "C" {

const char* fnorm_last_error(void) { return g_last_error.c_str(); }

const char* fnorm_status_name(fnorm_status status) {
  switch (status) {
    case FNORM_OK: return "ok";
    case FNORM_ERR_VALIDATION: return "validation error";
    case FNORM_ERR_SHAPE: return "shape error";
    case FNORM_ERR_IO: return "io error";
    case FNORM_ERR_NUMERICAL: return "numerical error";
    case FNORM_ERR_UNSUPPORTED: return "unsupported";
    case FNORM_ERR_CHECK_FAILED: return "check failed";
    case FNORM_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fnorm_version(void) { return "0.1.0"; }

void fnorm_set_log_callback(fnorm_log_fn fn, void* user) {
  if (fn == nullptr) {
    fnorm::set_log_sink({});
    return;
  }
  fnorm::set_log_sink([fn, user](fnorm::LogLevel level, const std::string& msg) {
    fn(level == fnorm::LogLevel::kWarning ? 1 : 0, msg.c_str(), user);
  });
}

const char* fnorm_report_json(const fnorm_report* report) {
  return report ? report->json.c_str() : "";
}

void fnorm_report_free(fnorm_report* report) { delete report; }

fnorm_status fnorm_edge_list_load(const char* path, fnorm_edge_list** out) {
  return guarded([&] {
    FNORM_REQUIRE(path && out, "fnorm_edge_list_load: null argument");
    *out = new fnorm_edge_list{fnorm::load_edge_list(path)};
    return FNORM_OK;
  });
}

size_t fnorm_edge_list_num_records(const fnorm_edge_list* edges) {
  return edges ? edges->value.records.size() : 0;
}

size_t fnorm_edge_list_num_nodes(const fnorm_edge_list* edges) {
  return edges ? edges->value.num_nodes() : 0;
}

void fnorm_edge_list_free(fnorm_edge_list* edges) { delete edges; }

fnorm_status fnorm_slice(const fnorm_edge_list* edges, size_t target_edges,
                         int day_boundary_rule, size_t max_steps,
                         fnorm_snapshots** out) {
  return guarded([&] {
    FNORM_REQUIRE(edges && out, "fnorm_slice: null argument");
    fnorm::SliceConfig cfg;
    cfg.target_edges_per_slice = target_edges;
    cfg.day_boundary_rule = day_boundary_rule != 0;
    if (max_steps > 0) cfg.max_steps = max_steps;
    *out = new fnorm_snapshots{fnorm::slice(edges->value, cfg)};
    return FNORM_OK;
  });
}

fnorm_status fnorm_snapshots_save(const fnorm_snapshots* seq, const char* dir) {
  return guarded([&] {
    FNORM_REQUIRE(seq && dir, "fnorm_snapshots_save: null argument");
    fnorm::persist_snapshots(seq->value, dir);
    return FNORM_OK;
  });
}

fnorm_status fnorm_snapshots_load(const char* dir, fnorm_snapshots** out) {
  return guarded([&] {
    FNORM_REQUIRE(dir && out, "fnorm_snapshots_load: null argument");
    *out = new fnorm_snapshots{fnorm::load_snapshots(dir)};
    return FNORM_OK;
  });
}

size_t fnorm_snapshots_count(const fnorm_snapshots* seq) {
  return seq ? seq->value.size() : 0;
}

fnorm_status fnorm_snapshots_step_info(const fnorm_snapshots* seq, size_t step,
                                       size_t* num_nodes, size_t* num_records,
                                       size_t* num_links) {
  return guarded([&] {
    FNORM_REQUIRE(seq, "fnorm_snapshots_step_info: null snapshots");
    FNORM_REQUIRE(step < seq->value.size(),
                  "fnorm_snapshots_step_info: step out of range");
    const auto& s = seq->value[step];
    if (num_nodes) *num_nodes = s.num_nodes();
    if (num_records) *num_records = s.records().size();
    if (num_links) *num_links = s.link_pairs().size();
    return FNORM_OK;
  });
}

void fnorm_snapshots_free(fnorm_snapshots* seq) { delete seq; }

fnorm_status fnorm_config_new(fnorm_config** out) {
  return guarded([&] {
    FNORM_REQUIRE(out, "fnorm_config_new: null argument");
    *out = new fnorm_config{};
    return FNORM_OK;
  });
}

fnorm_status fnorm_config_from_json(const char* json, fnorm_config** out) {
  return guarded([&] {
    FNORM_REQUIRE(json && out, "fnorm_config_from_json: null argument");
    *out = new fnorm_config{fnorm::config_from_json(json)};
    return FNORM_OK;
  });
}

fnorm_status fnorm_config_load(const char* path, fnorm_config** out) {
  return guarded([&] {
    FNORM_REQUIRE(path && out, "fnorm_config_load: null argument");
    *out = new fnorm_config{fnorm::load_config(path)};
    return FNORM_OK;
  });
}

fnorm_status fnorm_config_set(fnorm_config* cfg, const char* key,
                              const char* value) {
  return guarded([&] {
    FNORM_REQUIRE(cfg && key && value, "fnorm_config_set: null argument");
    fnorm::set_option(cfg->value, key, value);
    return FNORM_OK;
  });
}

fnorm_status fnorm_config_validate(const fnorm_config* cfg) {
  return guarded([&] {
    FNORM_REQUIRE(cfg, "fnorm_config_validate: null config");
    fnorm::validate(cfg->value);
    return FNORM_OK;
  });
}

fnorm_status fnorm_config_to_json(const fnorm_config* cfg, fnorm_report** out) {
  return guarded([&] {
    FNORM_REQUIRE(cfg && out, "fnorm_config_to_json: null argument");
    return emit(fnorm::to_json(cfg->value), out);
  });
}

fnorm_status fnorm_config_hash(const fnorm_config* cfg, char* out) {
  return guarded([&] {
    FNORM_REQUIRE(cfg && out, "fnorm_config_hash: null argument");
    const std::string h = fnorm::config_hash(cfg->value);
    std::memcpy(out, h.c_str(), h.size() + 1);
    return FNORM_OK;
  });
}

void fnorm_config_free(fnorm_config* cfg) { delete cfg; }

fnorm_status fnorm_train(const fnorm_config* cfg, fnorm_report** out) {
  return guarded([&] {
    FNORM_REQUIRE(cfg && out, "fnorm_train: null argument");
    return emit(fnorm::summary_json(fnorm::run_train(cfg->value)), out);
  });
}

fnorm_status fnorm_eval(const fnorm_config* cfg, fnorm_report** out) {
  return guarded([&] {
    FNORM_REQUIRE(cfg && out, "fnorm_eval: null argument");
    return emit(fnorm::summary_json(fnorm::run_eval(cfg->value)), out);
  });
}

fnorm_status fnorm_compare_norms(const fnorm_config* cfg, const char* frameworks,
                                 fnorm_report** out) {
  return guarded([&] {
    FNORM_REQUIRE(cfg && out, "fnorm_compare_norms: null argument");
    std::vector<fnorm::Framework> list;
    if (frameworks == nullptr || *frameworks == '\0') {
      list = {fnorm::Framework::kDynGcn, fnorm::Framework::kGruGcn};
    } else {
      std::stringstream ss(frameworks);
      std::string item;
      while (std::getline(ss, item, ',')) list.push_back(fnorm::parse_framework(item));
    }
    return emit(fnorm::comparison_json(fnorm::run_compare_norms(cfg->value, list)),
                out);
  });
}

fnorm_status fnorm_diagnose(const char* options_json, fnorm_report** out) {
  return guarded([&] {
    FNORM_REQUIRE(out, "fnorm_diagnose: null argument");
    fnorm::DiagnoseOptions opts;
    if (options_json != nullptr && *options_json != '\0') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(options_json);
        for (const auto& [key, v] : j.items()) {
          if (key == "out-dir") opts.out_dir = v.get<std::string>();
          else if (key == "dataset") opts.dataset = v.get<std::string>();
          else if (key == "seed") opts.seed = v.get<std::uint64_t>();
          else if (key == "theorem-trials") opts.theorem_trials = v.get<std::size_t>();
          else if (key == "trace-sequences") opts.trace_sequences = v.get<std::size_t>();
          else if (key == "trace-steps") opts.trace_steps = v.get<std::size_t>();
          else if (key == "scaling") opts.scaling = v.get<bool>();
          else if (key == "scaling-n") opts.scaling_n = v.get<std::size_t>();
          else if (key == "scaling-dim") opts.scaling_dim = v.get<std::size_t>();
          else return fail(FNORM_ERR_VALIDATION, "unknown diagnose option '" + key + "'");
        }
      } catch (const nlohmann::json::exception& e) {
        return fail(FNORM_ERR_VALIDATION, std::string("bad diagnose options: ") + e.what());
      }
    }
    const fnorm::DiagnoseSummary d = fnorm::run_diagnose(opts);
    emit(fnorm::diagnose_json(d), out);
    if (!d.ok()) return fail(FNORM_ERR_CHECK_FAILED, "one or more diagnostic checks failed");
    return FNORM_OK;
  });
}

fnorm_status fnorm_auc(const double* pos, size_t num_pos, const double* neg,
                       size_t num_neg, double* out) {
  return guarded([&] {
    FNORM_REQUIRE(out && (pos || num_pos == 0) && (neg || num_neg == 0),
                  "fnorm_auc: null argument");
    *out = fnorm::auc({pos, num_pos}, {neg, num_neg});
    return FNORM_OK;
  });
}

fnorm_status fnorm_average_precision(const double* pos, size_t num_pos,
                                     const double* neg, size_t num_neg,
                                     double* out) {
  return guarded([&] {
    FNORM_REQUIRE(out && (pos || num_pos == 0) && (neg || num_neg == 0),
                  "fnorm_average_precision: null argument");
    *out = fnorm::average_precision({pos, num_pos}, {neg, num_neg});
    return FNORM_OK;
  });
}

fnorm_status fnorm_feature_norm(const double* in, size_t rows, size_t cols,
                                double* out) {
  return guarded([&] {
    FNORM_REQUIRE(in && out, "fnorm_feature_norm: null argument");
    fnorm::Matrix m(rows, cols, std::vector<double>(in, in + rows * cols));
    const fnorm::Matrix z = fnorm::feature_norm(m);
    std::memcpy(out, z.data(), z.size() * sizeof(double));
    return FNORM_OK;
  });
}

}  // extern "C"
