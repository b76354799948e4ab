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

#include "fnorm/experiment.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "fnorm/error.hpp"
#include "fnorm/log.hpp"

namespace fnorm {
namespace {

using nlohmann::ordered_json;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// NaN has no JSON spelling; emit null instead.
ordered_json jnum(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

std::uint64_t fnv1a(std::string_view text,
                    std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string compact_config(const ExperimentConfig& cfg) {
  return nlohmann::json::parse(to_json(cfg)).dump();
}

void write_header(std::ostream& out, const ExperimentConfig& cfg) {
  out << "# config=" << compact_config(cfg) << "\n";
  out << "# config-hash=" << config_hash(cfg) << "\n";
}

std::filesystem::path seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
  return std::filesystem::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
}

// Runs fn(i) for i in [0, count) on worker_count() threads; the first
// exception (by index) is rethrown on the calling thread.
template <typename Fn>
void parallel_for(std::size_t count, Fn fn) {
  const std::size_t workers = std::min(worker_count(), count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SnapshotSequence load_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset.empty()) {
    throw ValidationError("no dataset given; pass --dataset <snapshot store>");
  }
  return load_snapshots(cfg.dataset);
}

void finalize(RunSummary& s) {
  std::vector<double> auc, ap, train_r, test_r;
  for (const auto& e : s.evaluations) {
    auc.push_back(e.metrics.mean_auc);
    ap.push_back(e.metrics.mean_ap);
    train_r.push_back(e.mean_train_rneg);
    test_r.push_back(e.metrics.mean_rneg);
  }
  s.auc = aggregate_values(auc);
  s.ap = aggregate_values(ap);
  s.train_rneg = aggregate_values(train_r);
  s.test_rneg = aggregate_values(test_r);
  std::uint64_t h = fnv1a(s.config_hash);
  for (const auto& e : s.evaluations) {
    h = fnv1a(num(e.metrics.mean_auc) + num(e.metrics.mean_ap) +
                  num(e.mean_train_rneg),
              h);
  }
  s.run_id = hex16(h).substr(0, 12);
}

void write_train_log(const ExperimentConfig& cfg, std::uint64_t seed,
                     const TrainResult& r) {
  const auto path = seed_dir(cfg, seed) / "train_log.csv";
  auto out = open_out(path);
  write_header(out, cfg);
  out << "# seed=" << seed << "\n";
  out << "# best-epoch=" << r.best_epoch << " best-loss=" << num(r.best_loss)
      << " log-hash=" << log_hash(r.log) << "\n";
  out << "epoch,step,loss,wall_ms\n";
  for (const auto& row : r.log) {
    out << row.epoch << ',' << row.step + 1 << ',' << num(row.loss) << ','
        << num(row.wall_ms) << "\n";
  }
  close_out(out, path);
}

void write_eval_files(const RunSummary& s) {
  const std::filesystem::path dir(s.config.out_dir);
  ensure_dir(dir);
  {
    const auto path = dir / "metrics.csv";
    auto out = open_out(path);
    write_header(out, s.config);
    out << "seed,step,metric,value\n";
    for (const auto& e : s.evaluations) {
      for (const auto& m : e.metrics.steps) {
        const auto row = [&](const char* name, const std::string& v) {
          out << e.seed << ',' << m.step + 1 << ',' << name << ',' << v << "\n";
        };
        row("num_positives", std::to_string(m.num_positives));
        row("num_negatives", std::to_string(m.num_negatives));
        row("num_skipped", std::to_string(m.num_skipped));
        if (!m.evaluated) continue;
        row("auc", num(m.auc));
        row("ap", num(m.ap));
        row("rneg", num(m.rneg.ratio));
      }
      for (std::size_t k = 0; k < e.train_rneg.size(); ++k) {
        out << e.seed << ',' << s.split.train[k] + 1 << ",train_rneg,"
            << num(e.train_rneg[k].ratio) << "\n";
      }
    }
    close_out(out, path);
  }
  {
    const auto path = dir / "curves.csv";
    auto out = open_out(path);
    write_header(out, s.config);
    out << "step,seeds,mean_auc,std_auc,mean_ap,std_ap\n";
    for (std::size_t k = 0; k < s.split.test.size(); ++k) {
      std::vector<double> auc, ap;
      for (const auto& e : s.evaluations) {
        const auto& m = e.metrics.steps[k];
        if (!m.evaluated) continue;
        auc.push_back(m.auc);
        ap.push_back(m.ap);
      }
      const Aggregate a = aggregate_values(auc);
      const Aggregate p = aggregate_values(ap);
      out << s.split.test[k] + 1 << ',' << auc.size() << ',' << num(a.mean)
          << ',' << num(a.stddev) << ',' << num(p.mean) << ',' << num(p.stddev)
          << "\n";
    }
    close_out(out, path);
  }
  {
    const auto path = dir / "summary.json";
    auto out = open_out(path);
    out << summary_json(s) << "\n";
    close_out(out, path);
  }
}

std::vector<std::size_t> one_based(const std::vector<std::size_t>& v) {
  std::vector<std::size_t> out;
  for (auto x : v) out.push_back(x + 1);
  return out;
}

}  // namespace

std::size_t worker_count() {
  const char* env = std::getenv("FNORM_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(env, env + std::strlen(env), v);
  if (ec != std::errc() || *ptr != '\0' || v == 0) {
    log_warning("ignoring FNORM_THREADS='" + std::string(env) +
                "' (expected a positive integer)");
    return 1;
  }
  return v;
}

std::string log_hash(const std::vector<TrainLogRow>& log) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& row : log) {
    std::uint64_t words[3] = {row.epoch, row.step, 0};
    std::memcpy(&words[2], &row.loss, sizeof(double));
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(words), sizeof(words)), h);
  }
  return hex16(h);
}

Aggregate aggregate_values(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) {
    a.mean = a.stddev = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return a;
}

SeedEvaluation evaluate_seed(const ExperimentConfig& cfg,
                             const SnapshotSequence& seq, const Split& split,
                             const ModelState& params, std::uint64_t seed) {
  SeedEvaluation out;
  out.seed = seed;
  const auto embeddings = infer_embeddings(params, seq, split.train, seed);
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t k = 0; k < split.train.size(); ++k) {
    const std::size_t t = split.train[k];
    const std::uint64_t s = derive_seed(seed + t * 0x9e3779b97f4a7c15ULL,
                                        Stream::kEvaluation);
    RNeg r;
    if (seq[t].link_pairs().empty()) {
      r.undefined = true;
      r.ratio = std::numeric_limits<double>::quiet_NaN();
    } else {
      r = r_neg(embeddings[k], seq[t], s);
    }
    if (!r.undefined) {
      sum += r.ratio;
      ++counted;
    }
    out.train_rneg.push_back(r);
  }
  out.mean_train_rneg =
      counted ? sum / static_cast<double>(counted)
              : std::numeric_limits<double>::quiet_NaN();
  EvalTask task;
  task.embeddings = embeddings.back();
  task.test_steps = split.test;
  task.seed = seed;
  task.skip_unseen = cfg.skip_unseen;
  out.metrics = evaluate_link_prediction(task, seq);
  return out;
}

SnapshotSequence run_slice(const std::filesystem::path& edge_list,
                           const std::filesystem::path& store,
                           const SliceConfig& cfg) {
  const TemporalEdgeList edges = load_edge_list(edge_list);
  SnapshotSequence seq = slice(edges, cfg);
  persist_snapshots(seq, store);
  return seq;
}

RunSummary run_experiment(const ExperimentConfig& cfg,
                          const SnapshotSequence& seq) {
  validate(cfg);
  validate_sequence(seq);
  RunSummary s;
  s.config = cfg;
  s.config_hash = config_hash(cfg);
  s.num_steps = seq.size();
  s.split = compute_split(cfg, seq.size());
  s.training.resize(cfg.seeds.size());
  s.evaluations.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    s.training[i] = train(seq, train_options(cfg, s.split.train, seed));
    s.evaluations[i] = evaluate_seed(cfg, seq, s.split, s.training[i].best, seed);
  });
  finalize(s);
  return s;
}

RunSummary run_train(const ExperimentConfig& cfg) {
  validate(cfg);
  const SnapshotSequence seq = load_dataset(cfg);
  RunSummary s;
  s.config = cfg;
  s.config_hash = config_hash(cfg);
  s.num_steps = seq.size();
  s.split = compute_split(cfg, seq.size());
  s.training.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t i) {
    s.training[i] = train(seq, train_options(cfg, s.split.train, cfg.seeds[i]));
  });
  std::uint64_t h = fnv1a(s.config_hash);
  for (const auto& r : s.training) h = fnv1a(log_hash(r.log), h);
  s.run_id = hex16(h).substr(0, 12);
  // All writes happen here, on the calling thread.
  const std::filesystem::path dir(cfg.out_dir);
  ensure_dir(dir);
  {
    const auto path = dir / "config.json";
    auto out = open_out(path);
    out << to_json(cfg) << "\n";
    close_out(out, path);
  }
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    const std::uint64_t seed = cfg.seeds[i];
    ensure_dir(seed_dir(cfg, seed));
    CheckpointMeta meta;
    meta.seed = seed;
    ordered_json extra;
    extra["config-hash"] = s.config_hash;
    extra["best-epoch"] = s.training[i].best_epoch;
    extra["best-loss"] = jnum(s.training[i].best_loss);
    extra["log-hash"] = log_hash(s.training[i].log);
    meta.extra_json = extra.dump();
    save_checkpoint(s.training[i].best, meta, seed_dir(cfg, seed) / "checkpoint.fnck");
    write_train_log(cfg, seed, s.training[i]);
  }
  return s;
}

RunSummary run_eval(const ExperimentConfig& cfg) {
  validate(cfg);
  const SnapshotSequence seq = load_dataset(cfg);
  RunSummary s;
  s.config = cfg;
  s.config_hash = config_hash(cfg);
  s.num_steps = seq.size();
  s.split = compute_split(cfg, seq.size());
  std::vector<ModelState> params;
  for (std::uint64_t seed : cfg.seeds) {
    const auto path = seed_dir(cfg, seed) / "checkpoint.fnck";
    if (!std::filesystem::exists(path)) {
      throw IoError("missing checkpoint " + path.string() + "; run train first");
    }
    CheckpointMeta meta;
    params.push_back(load_checkpoint(path, &meta));
    const ModelSpec& spec = params.back().spec;
    if (spec.framework != cfg.framework || spec.norm.variant != cfg.norm.variant ||
        spec.dim != cfg.dim) {
      throw ValidationError("checkpoint " + path.string() +
                            " was trained with a different framework, norm or dim");
    }
    if (meta.seed != seed) {
      throw ValidationError("checkpoint " + path.string() + " belongs to seed " +
                            std::to_string(meta.seed));
    }
  }
  s.evaluations.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t i) {
    s.evaluations[i] = evaluate_seed(cfg, seq, s.split, params[i], cfg.seeds[i]);
  });
  finalize(s);
  write_eval_files(s);
  return s;
}

std::vector<NormComparisonRow> run_compare_norms(
    const ExperimentConfig& cfg, const std::vector<Framework>& frameworks) {
  validate(cfg);
  if (frameworks.empty()) throw ValidationError("no framework to compare");
  const SnapshotSequence seq = load_dataset(cfg);
  std::vector<NormComparisonRow> rows;
  for (Framework f : frameworks) {
    for (NormVariant v : {NormVariant::kNone, NormVariant::kFeatureNorm,
                          NormVariant::kPairNorm, NormVariant::kPairNormSI}) {
      ExperimentConfig c = cfg;
      c.framework = f;
      c.norm.variant = v;
      const RunSummary s = run_experiment(c, seq);
      rows.push_back({f, v, s.auc, s.ap, s.train_rneg});
    }
  }
  const std::filesystem::path dir(cfg.out_dir);
  ensure_dir(dir);
  const auto path = dir / "comparison.csv";
  auto out = open_out(path);
  write_header(out, cfg);
  out << "framework,norm,mean_auc,std_auc,mean_ap,std_ap,mean_rneg\n";
  for (const auto& r : rows) {
    out << framework_name(r.framework) << ',' << norm_variant_name(r.norm) << ','
        << num(r.auc.mean) << ',' << num(r.auc.stddev) << ',' << num(r.ap.mean)
        << ',' << num(r.ap.stddev) << ',' << num(r.train_rneg.mean) << "\n";
  }
  close_out(out, path);
  return rows;
}

DiagnoseSummary run_diagnose(const DiagnoseOptions& opts) {
  DiagnoseSummary d;
  Theorem1Config tc;
  tc.trials = opts.theorem_trials;
  tc.seed = opts.seed;
  d.theorem1 = theorem1_sweep(tc);

  struct Source {
    std::string name;
    SnapshotSequence seq;
  };
  std::vector<Source> sources;
  if (!opts.dataset.empty()) {
    sources.push_back({opts.dataset, load_snapshots(opts.dataset)});
  } else {
    for (std::size_t k = 0; k < opts.trace_sequences; ++k) {
      const std::uint64_t s = derive_seed(opts.seed + k, Stream::kDiagnostics);
      sources.push_back({"synthetic_" + std::to_string(k),
                         synthetic_sequence(opts.trace_steps, 20, 40, 0.15, s)});
    }
  }
  std::vector<std::string> trace_source;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    for (Framework f : {Framework::kDynGcn, Framework::kGruGcn}) {
      for (NormVariant v : {NormVariant::kNone, NormVariant::kFeatureNorm}) {
        DistanceTrace t = corollary1_trace(sources[k].seq, f, opts.seed + k, v);
        bool failed = false;
        if (v == NormVariant::kNone) {
          failed = !t.per_step_holds || !t.summed_holds;
        } else {
          for (const auto& s : t.steps) failed = failed || s.max_row_norm_error > 1e-9;
        }
        d.trace_failures += failed ? 1 : 0;
        d.traces.push_back(std::move(t));
        trace_source.push_back(sources[k].name);
      }
    }
  }
  if (opts.scaling) {
    d.scaling = norm_scaling_probe(opts.scaling_n, opts.scaling_dim, 7, opts.seed);
    d.scaling_ok = d.scaling.ratio >= kScalingRatioLow &&
                   d.scaling.ratio <= kScalingRatioHigh;
  }

  const std::filesystem::path dir(opts.out_dir);
  ensure_dir(dir);
  {
    const auto path = dir / "theorem1.csv";
    auto out = open_out(path);
    out << "# seed=" << opts.seed << "\n";
    out << "trial,n,d,p,num_edges,d_before,d_after,violation,"
           "d_before_transition,d_after_transition,transition_violation,"
           "lemma1_residual,lemma1_printed_residual,lemma2_min_form,"
           "lemma2_raw_min_form\n";
    for (const auto& t : d.theorem1.trials) {
      out << t.trial << ',' << t.n << ',' << t.d << ',' << num(t.p) << ','
          << t.num_edges << ',' << num(t.d_before) << ',' << num(t.d_after)
          << ',' << t.violation << ',' << num(t.d_before_transition) << ','
          << num(t.d_after_transition) << ',' << t.transition_violation << ','
          << num(t.lemma1_residual) << ',' << num(t.lemma1_printed_residual)
          << ',' << num(t.lemma2_min_form) << ',' << num(t.lemma2_raw_min_form)
          << "\n";
    }
    close_out(out, path);
  }
  {
    const auto path = dir / "trace.csv";
    auto out = open_out(path);
    out << "# seed=" << opts.seed << "\n";
    out << "source,framework,norm,step,num_nodes,d_plain,d_conv,"
           "pairwise_conv,max_row_norm_error\n";
    for (std::size_t k = 0; k < d.traces.size(); ++k) {
      const auto& t = d.traces[k];
      for (const auto& s : t.steps) {
        out << trace_source[k] << ',' << framework_name(t.framework) << ','
            << norm_variant_name(t.conv_norm) << ',' << s.step + 1 << ','
            << s.num_nodes << ',' << num(s.d_plain) << ',' << num(s.d_conv)
            << ',' << num(s.pairwise_conv) << ',' << num(s.max_row_norm_error)
            << "\n";
      }
    }
    close_out(out, path);
  }
  if (opts.scaling) {
    const auto path = dir / "scaling.csv";
    auto out = open_out(path);
    out << "n,dim,seconds_n,seconds_2n,ratio,low,high\n";
    out << d.scaling.n << ',' << d.scaling.dim << ',' << num(d.scaling.seconds_n)
        << ',' << num(d.scaling.seconds_2n) << ',' << num(d.scaling.ratio) << ','
        << num(kScalingRatioLow) << ',' << num(kScalingRatioHigh) << "\n";
    close_out(out, path);
  }
  {
    const auto path = dir / "diagnose.json";
    auto out = open_out(path);
    out << diagnose_json(d) << "\n";
    close_out(out, path);
  }
  return d;
}

std::string summary_json(const RunSummary& s) {
  ordered_json j;
  j["run-id"] = s.run_id;
  j["config-hash"] = s.config_hash;
  j["config"] = nlohmann::ordered_json::parse(to_json(s.config));
  j["num-steps"] = s.num_steps;
  j["train-steps"] = one_based(s.split.train);
  j["test-steps"] = one_based(s.split.test);
  const auto agg = [](const Aggregate& a) {
    return ordered_json{{"mean", jnum(a.mean)}, {"std", jnum(a.stddev)}};
  };
  j["auc"] = agg(s.auc);
  j["ap"] = agg(s.ap);
  j["rneg-train"] = agg(s.train_rneg);
  j["rneg-test"] = agg(s.test_rneg);
  j["seeds"] = ordered_json::array();
  for (std::size_t i = 0; i < s.evaluations.size(); ++i) {
    const auto& e = s.evaluations[i];
    ordered_json row;
    row["seed"] = e.seed;
    row["auc"] = jnum(e.metrics.mean_auc);
    row["ap"] = jnum(e.metrics.mean_ap);
    row["rneg-train"] = jnum(e.mean_train_rneg);
    row["rneg-test"] = jnum(e.metrics.mean_rneg);
    row["skipped-positives"] = e.metrics.total_skipped;
    if (i < s.training.size()) {
      row["best-epoch"] = s.training[i].best_epoch;
      row["best-loss"] = jnum(s.training[i].best_loss);
      row["log-hash"] = log_hash(s.training[i].log);
    }
    row["steps"] = ordered_json::array();
    for (const auto& m : e.metrics.steps) {
      row["steps"].push_back({{"step", m.step + 1},
                              {"evaluated", m.evaluated},
                              {"auc", jnum(m.auc)},
                              {"ap", jnum(m.ap)},
                              {"rneg", jnum(m.rneg.ratio)},
                              {"positives", m.num_positives},
                              {"negatives", m.num_negatives},
                              {"skipped", m.num_skipped}});
    }
    j["seeds"].push_back(row);
  }
  if (s.evaluations.empty()) {
    for (std::size_t i = 0; i < s.training.size(); ++i) {
      j["seeds"].push_back({{"seed", s.config.seeds[i]},
                            {"best-epoch", s.training[i].best_epoch},
                            {"best-loss", jnum(s.training[i].best_loss)},
                            {"log-hash", log_hash(s.training[i].log)}});
    }
  }
  return j.dump(2);
}

std::string comparison_json(const std::vector<NormComparisonRow>& rows) {
  ordered_json j = ordered_json::array();
  for (const auto& r : rows) {
    j.push_back({{"framework", framework_name(r.framework)},
                 {"norm", norm_variant_name(r.norm)},
                 {"auc", {{"mean", jnum(r.auc.mean)}, {"std", jnum(r.auc.stddev)}}},
                 {"ap", {{"mean", jnum(r.ap.mean)}, {"std", jnum(r.ap.stddev)}}},
                 {"rneg-train", jnum(r.train_rneg.mean)}});
  }
  return j.dump(2);
}

std::string diagnose_json(const DiagnoseSummary& d) {
  ordered_json j;
  j["ok"] = d.ok();
  j["theorem1"] = {{"trials", d.theorem1.trials.size()},
                   {"violations", d.theorem1.violations},
                   {"transition-violations", d.theorem1.transition_violations},
                   {"max-lemma1-residual", jnum(d.theorem1.max_lemma1_residual)},
                   {"min-lemma2-form", jnum(d.theorem1.min_lemma2_form)}};
  j["traces"] = {{"count", d.traces.size()}, {"failures", d.trace_failures}};
  j["scaling"] = {{"n", d.scaling.n},
                  {"ratio", jnum(d.scaling.ratio)},
                  {"ok", d.scaling_ok}};
  return j.dump(2);
}

}  // namespace fnorm
