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

#include "fnorm/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "fnorm/error.hpp"
#include "fnorm/norms.hpp"

namespace fnorm {

namespace {

void require_row_stochastic(const NormalizedAdjacency& adj, const char* what) {
  if (adj.flavor != AdjacencyFlavor::kRowStochastic) {
    throw ValidationError(std::string(what) +
                          " needs a row-stochastic operator (row_normalize or "
                          "transition_normalize), got the symmetric one");
  }
}

void require_rows(const NormalizedAdjacency& adj, const Matrix& x,
                  const char* what) {
  if (adj.n != x.rows()) {
    throw ShapeError(std::string(what) + ": operator of dimension " +
                     std::to_string(adj.n) + " vs matrix " + x.shape_string());
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

bool exceeds(double after, double before, double rel_tol) {
  return after > before + rel_tol * std::abs(before);
}

}  // namespace

double weighted_smoothness_distance(const Matrix& x,
                                    const NormalizedAdjacency& adj) {
  require_row_stochastic(adj, "weighted_smoothness_distance");
  require_rows(adj, x, "weighted_smoothness_distance");
  double total = 0.0;
  for (std::size_t i = 0; i < adj.n; ++i) {
    for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      if (adj.col[k] == i) continue;
      total += adj.val[k] * squared_distance(x.row(i), x.row(adj.col[k]));
    }
  }
  return 0.5 * total;
}

Matrix aggregate(const NormalizedAdjacency& adj, const Matrix& x) {
  require_rows(adj, x, "aggregate");
  return spmm(adj, x);
}

double total_pairwise_distance(const Matrix& z) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.rows(); ++j)
      total += squared_distance(z.row(i), z.row(j));
  return total;
}

double pairwise_distance_identity(const Matrix& z) {
  std::vector<double> col_sum(z.cols(), 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto r = z.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      col_sum[k] += r[k];
      sq += r[k] * r[k];
    }
  }
  double sum_sq = 0.0;
  for (double c : col_sum) sum_sq += c * c;
  return 2.0 * static_cast<double>(z.rows()) * sq - 2.0 * sum_sq;
}

Lemma1Result lemma1_check(const Matrix& x, const NormalizedAdjacency& adj) {
  require_row_stochastic(adj, "lemma1_check");
  require_rows(adj, x, "lemma1_check");
  const Matrix smoothed = spmm(adj, x);
  Lemma1Result out;
  std::vector<double> grad(x.cols());
  for (std::size_t i = 0; i < adj.n; ++i) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const auto xj = x.row(adj.col[k]);
      for (std::size_t c = 0; c < x.cols(); ++c)
        grad[c] += adj.val[k] * (x(i, c) - xj[c]);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out.residual = std::max(
          out.residual, std::abs(x(i, c) - grad[c] - smoothed(i, c)));
      out.printed_form_residual = std::max(
          out.printed_form_residual, std::abs(smoothed(i, c) - grad[c] - x(i, c)));
    }
  }
  return out;
}

Lemma2Result lemma2_check(const NormalizedAdjacency& adj, std::uint64_t seed,
                          std::size_t samples) {
  require_row_stochastic(adj, "lemma2_check");
  const std::size_t n = adj.n;
  if (n > kLemma2MaxNodes) {
    throw ValidationError("lemma2_check: " + std::to_string(n) +
                          " nodes exceeds the dense budget of " +
                          std::to_string(kLemma2MaxNodes) +
                          "; check a sampled subgraph instead");
  }
  if (n == 0) throw ValidationError("lemma2_check: empty operator");
  if (samples == 0) throw ValidationError("lemma2_check: samples must be >= 1");
  Matrix raw = adj.to_dense();
  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double p = raw(i, j);
      if (p != 0.0) sym(i, j) = p * std::sqrt(adj.degree[i] / adj.degree[j]);
    }
    raw(i, i) += 1.0;
    sym(i, i) += 1.0;
  }
  auto form = [n](const Matrix& m, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) r += m(i, j) * v[j];
      s += v[i] * r;
    }
    return s;
  };
  Rng rng(seed);
  Lemma2Result out;
  out.min_form = std::numeric_limits<double>::infinity();
  out.raw_min_form = std::numeric_limits<double>::infinity();
  std::vector<double> v(n);
  for (std::size_t s = 0; s < samples; ++s) {
    if (s < n) {
      std::fill(v.begin(), v.end(), 0.0);
      v[s] = 1.0;
    } else {
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& e : v) {
          e = rng.normal();
          norm += e * e;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      for (double& e : v) e /= norm;
    }
    out.min_form = std::min(out.min_form, form(sym, v));
    out.raw_min_form = std::min(out.raw_min_form, form(raw, v));
  }
  out.samples = samples;
  return out;
}

Snapshot random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p)
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1.0});
  return build_snapshot(0, std::move(edges), n);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

SnapshotSequence synthetic_sequence(std::size_t steps, std::size_t n_first,
                                    std::size_t n_last, double p,
                                    std::uint64_t seed) {
  if (steps == 0 || n_first == 0 || n_last < n_first) {
    throw ValidationError("synthetic_sequence: need steps >= 1 and 1 <= n_first <= n_last");
  }
  Rng rng(seed);
  SnapshotSequence seq;
  std::vector<std::size_t> first_seen;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t n =
        steps == 1 ? n_last
                   : n_first + (n_last - n_first) * t / (steps - 1);
    while (first_seen.size() < n) first_seen.push_back(t);
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < p)
          edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), 1.0});
    seq.push_back(build_snapshot(t, std::move(edges), n, first_seen));
  }
  return seq;
}

Theorem1Report theorem1_sweep(const Theorem1Config& cfg) {
  if (cfg.trials == 0 || cfg.max_nodes < 2 || cfg.max_dim == 0 ||
      cfg.probabilities.empty()) {
    throw ValidationError("theorem1_sweep: empty configuration");
  }
  Rng rng(derive_seed(cfg.seed, Stream::kDiagnostics));
  Theorem1Report report;
  report.min_lemma2_form = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < cfg.trials; ++k) {
    Theorem1Trial t;
    t.trial = k;
    t.n = 2 + rng.below(cfg.max_nodes - 1);
    t.d = 1 + rng.below(cfg.max_dim);
    t.p = cfg.probabilities[k % cfg.probabilities.size()];
    const Snapshot g = random_graph(t.n, t.p, rng);
    t.num_edges = g.edges().size();
    const Matrix x = random_matrix(t.n, t.d, rng);

    const NormalizedAdjacency row = row_normalize(g);
    t.d_before = weighted_smoothness_distance(x, row);
    t.d_after = weighted_smoothness_distance(aggregate(row, x), row);
    t.violation = exceeds(t.d_after, t.d_before, cfg.tolerance);

    const NormalizedAdjacency walk = transition_normalize(g);
    t.d_before_transition = weighted_smoothness_distance(x, walk);
    t.d_after_transition = weighted_smoothness_distance(aggregate(walk, x), walk);
    t.transition_violation =
        exceeds(t.d_after_transition, t.d_before_transition, cfg.tolerance);

    const Lemma1Result l1 = lemma1_check(x, walk);
    t.lemma1_residual = l1.residual;
    t.lemma1_printed_residual = l1.printed_form_residual;
    const Lemma2Result l2 = lemma2_check(walk, rng.next_u64());
    t.lemma2_min_form = l2.min_form;
    t.lemma2_raw_min_form = l2.raw_min_form;

    report.violations += t.violation ? 1 : 0;
    report.transition_violations += t.transition_violation ? 1 : 0;
    report.max_lemma1_residual = std::max(report.max_lemma1_residual, t.lemma1_residual);
    report.min_lemma2_form = std::min(report.min_lemma2_form, t.lemma2_min_form);
    report.trials.push_back(t);
  }
  return report;
}

DistanceTrace corollary1_trace(const SnapshotSequence& seq, Framework framework,
                               std::uint64_t seed, NormVariant conv_norm,
                               std::size_t dim) {
  if (seq.empty()) throw ValidationError("corollary1_trace: empty sequence");
  ModelSpec spec;
  spec.framework = framework;
  spec.dim = dim;
  Rng param_rng(derive_seed(seed, Stream::kParameters));
  const ModelState base = make_model(spec, param_rng);

  ModelState plain = clone_parameters(base);
  ModelState conv = clone_parameters(base);
  conv.spec.norm.variant = conv_norm;
  Rng plain_features(derive_seed(seed, Stream::kFeatures));
  Rng conv_features(derive_seed(seed, Stream::kFeatures));
  Rng unused(0);

  DistanceTrace trace;
  trace.framework = framework;
  trace.conv_norm = conv_norm;
  StepOptions plain_opts;
  plain_opts.skip_aggregation = true;
  for (const Snapshot& snap : seq) {
    auto sym = std::make_shared<const NormalizedAdjacency>(symmetric_normalize(snap));
    const NormalizedAdjacency row = row_normalize(snap);
    ad::Tape tape;
    const Matrix h = step(tape, plain, sym, plain_features, unused, plain_opts).value();
    const Matrix h_conv = step(tape, conv, sym, conv_features, unused, {}).value();

    DistanceStep s;
    s.step = snap.index();
    s.num_nodes = snap.num_nodes();
    s.d_plain = weighted_smoothness_distance(h, row);
    s.d_conv = weighted_smoothness_distance(h_conv, row);
    s.pairwise_conv = total_pairwise_distance(h_conv);
    for (std::size_t i = 0; i < h_conv.rows(); ++i) {
      s.max_row_norm_error = std::max(
          s.max_row_norm_error,
          std::abs(std::sqrt(squared_norm(h_conv.row(i))) - 1.0));
    }
    trace.sum_plain += s.d_plain;
    trace.sum_conv += s.d_conv;
    if (exceeds(s.d_conv, s.d_plain, 1e-9)) trace.per_step_holds = false;
    trace.steps.push_back(s);
  }
  trace.summed_holds = !exceeds(trace.sum_conv, trace.sum_plain, 1e-9);
  return trace;
}

ScalingProbe norm_scaling_probe(std::size_t n, std::size_t dim,
                                std::size_t repetitions, std::uint64_t seed) {
  if (n == 0 || dim == 0 || repetitions == 0) {
    throw ValidationError("norm_scaling_probe: n, dim and repetitions must be >= 1");
  }
  Rng rng(seed);
  const Matrix small = random_matrix(n, dim, rng);
  const Matrix large = random_matrix(2 * n, dim, rng);
  using Clock = std::chrono::steady_clock;
  auto time_once = [](const Matrix& m) {
    const auto start = Clock::now();
    const Matrix out = feature_norm(m);
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    volatile double sink = out.data()[0];
    (void)sink;
    return s;
  };
  ScalingProbe probe;
  probe.n = n;
  probe.dim = dim;
  probe.seconds_n = std::numeric_limits<double>::infinity();
  probe.seconds_2n = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < repetitions; ++r) {
    probe.seconds_n = std::min(probe.seconds_n, time_once(small));
    probe.seconds_2n = std::min(probe.seconds_2n, time_once(large));
  }
  probe.ratio = probe.seconds_2n / probe.seconds_n;
  return probe;
}

}  // namespace fnorm
