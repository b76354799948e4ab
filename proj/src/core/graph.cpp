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

#include "fnorm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fnorm/error.hpp"

namespace fnorm {
namespace {

std::string describe(std::size_t i, const Edge& e) {
  return "edge #" + std::to_string(i) + " (" + std::to_string(e.src) + ", " +
         std::to_string(e.dst) + ", " + std::to_string(e.weight) + ")";
}

struct AdjacencyRows {
  std::vector<std::vector<std::pair<NodeId, double>>> rows;
  std::vector<double> degree;
};

// Mirrored, merged adjacency with optional identity augmentation.
AdjacencyRows collect_rows(const Snapshot& s, bool add_identity) {
  const std::size_t n = s.num_nodes();
  AdjacencyRows out;
  out.rows.resize(n);
  out.degree.assign(n, 0.0);
  for (const Edge& e : s.edges()) {
    out.rows[e.src].emplace_back(e.dst, e.weight);
    if (e.src != e.dst) out.rows[e.dst].emplace_back(e.src, e.weight);
  }
  if (add_identity) {
    for (std::size_t i = 0; i < n; ++i)
      out.rows[i].emplace_back(static_cast<NodeId>(i), 1.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out.rows[i];
    std::sort(r.begin(), r.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t w = 0;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (w > 0 && r[w - 1].first == r[k].first) {
        r[w - 1].second += r[k].second;
      } else {
        r[w++] = r[k];
      }
    }
    r.resize(w);
    double d = 0.0;
    for (const auto& [c, v] : r) d += v;
    out.degree[i] = d;
  }
  return out;
}

template <typename ValueFn>
NormalizedAdjacency to_csr(const AdjacencyRows& rows, AdjacencyFlavor flavor,
                           ValueFn value) {
  NormalizedAdjacency adj;
  adj.n = rows.rows.size();
  adj.flavor = flavor;
  adj.degree = rows.degree;
  adj.row_ptr.reserve(adj.n + 1);
  adj.row_ptr.push_back(0);
  for (std::size_t i = 0; i < adj.n; ++i) {
    for (const auto& [c, v] : rows.rows[i]) {
      adj.col.push_back(c);
      adj.val.push_back(value(i, c, v));
    }
    adj.row_ptr.push_back(adj.col.size());
  }
  return adj;
}

}  // namespace

std::vector<NodePair> Snapshot::link_pairs() const {
  std::vector<NodePair> pairs;
  pairs.reserve(edges_.size());
  for (const Edge& e : edges_)
    if (e.src != e.dst) pairs.emplace_back(e.src, e.dst);
  return pairs;
}

Snapshot build_snapshot(std::size_t index, std::vector<Edge> edges,
                        std::size_t num_nodes,
                        std::vector<std::size_t> first_seen) {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.src >= num_nodes || e.dst >= num_nodes) {
      throw ValidationError(describe(i, e) + " has an endpoint outside [0, " +
                            std::to_string(num_nodes) + ")");
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw ValidationError(describe(i, e) +
                            " has a negative or non-finite weight");
    }
  }
  if (first_seen.empty()) {
    first_seen.assign(num_nodes, index);
  } else if (first_seen.size() != num_nodes) {
    throw ValidationError("node_first_seen has " +
                          std::to_string(first_seen.size()) +
                          " entries for " + std::to_string(num_nodes) +
                          " nodes");
  }
  for (std::size_t v = 0; v < first_seen.size(); ++v) {
    if (first_seen[v] > index) {
      throw ValidationError("node " + std::to_string(v) +
                            " first seen after snapshot " +
                            std::to_string(index));
    }
  }

  std::vector<Edge> merged;
  merged.reserve(edges.size());
  for (const Edge& e : edges) {
    const auto [a, b] = canonical_pair(e.src, e.dst);
    merged.push_back({a, b, e.weight});
  }
  // Stable so that weight summation order follows arrival order.
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Edge& x, const Edge& y) {
                     return x.src != y.src ? x.src < y.src : x.dst < y.dst;
                   });
  std::size_t w = 0;
  for (std::size_t k = 0; k < merged.size(); ++k) {
    if (w > 0 && merged[w - 1].src == merged[k].src &&
        merged[w - 1].dst == merged[k].dst) {
      merged[w - 1].weight += merged[k].weight;
    } else {
      merged[w++] = merged[k];
    }
  }
  merged.resize(w);

  Snapshot s;
  s.index_ = index;
  s.num_nodes_ = num_nodes;
  s.records_ = std::move(edges);
  s.edges_ = std::move(merged);
  s.first_seen_ = std::move(first_seen);
  return s;
}

void validate_sequence(const SnapshotSequence& seq) {
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (seq[t].index() != t) {
      throw ValidationError("snapshot at position " + std::to_string(t) +
                            " has index " + std::to_string(seq[t].index()));
    }
    if (t == 0) continue;
    const Snapshot& prev = seq[t - 1];
    if (seq[t].num_nodes() < prev.num_nodes()) {
      throw ValidationError("node count decreases at step " +
                            std::to_string(t));
    }
    for (std::size_t v = 0; v < prev.num_nodes(); ++v) {
      if (seq[t].node_first_seen()[v] != prev.node_first_seen()[v]) {
        throw ValidationError("first-seen step of node " + std::to_string(v) +
                              " changes at step " + std::to_string(t));
      }
    }
  }
}

Matrix NormalizedAdjacency::to_dense() const {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      m(i, col[k]) = val[k];
  return m;
}

NormalizedAdjacency symmetric_normalize(const Snapshot& s) {
  const AdjacencyRows rows = collect_rows(s, /*add_identity=*/true);
  std::vector<double> inv_sqrt(rows.degree.size());
  for (std::size_t i = 0; i < inv_sqrt.size(); ++i)
    inv_sqrt[i] = 1.0 / std::sqrt(rows.degree[i]);
  return to_csr(rows, AdjacencyFlavor::kSymmetric,
                [&](std::size_t i, NodeId j, double v) {
                  return v * inv_sqrt[i] * inv_sqrt[j];
                });
}

NormalizedAdjacency row_normalize(const Snapshot& s) {
  const AdjacencyRows rows = collect_rows(s, /*add_identity=*/true);
  return to_csr(rows, AdjacencyFlavor::kRowStochastic,
                [&](std::size_t i, NodeId, double v) {
                  return v / rows.degree[i];
                });
}

NormalizedAdjacency transition_normalize(const Snapshot& s) {
  AdjacencyRows rows = collect_rows(s, /*add_identity=*/false);
  for (std::size_t i = 0; i < rows.rows.size(); ++i) {
    if (rows.degree[i] == 0.0) {
      rows.rows[i] = {{static_cast<NodeId>(i), 1.0}};
      rows.degree[i] = 1.0;
    }
  }
  return to_csr(rows, AdjacencyFlavor::kRowStochastic,
                [&](std::size_t i, NodeId, double v) {
                  return v / rows.degree[i];
                });
}

Matrix spmm(const NormalizedAdjacency& adj, const Matrix& x) {
  if (adj.n != x.rows()) {
    throw ShapeError("spmm: adjacency of dimension " + std::to_string(adj.n) +
                     " cannot multiply matrix " + x.shape_string());
  }
  const std::size_t d = x.cols();
  Matrix out(adj.n, d);
  for (std::size_t i = 0; i < adj.n; ++i) {
    double* o = out.data() + i * d;
    for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const double a = adj.val[k];
      const double* xr = x.data() + static_cast<std::size_t>(adj.col[k]) * d;
      for (std::size_t j = 0; j < d; ++j) o[j] += a * xr[j];
    }
  }
  return out;
}

Matrix spmm_transposed(const NormalizedAdjacency& adj, const Matrix& x) {
  if (adj.n != x.rows()) {
    throw ShapeError("spmm_transposed: adjacency of dimension " +
                     std::to_string(adj.n) + " cannot multiply matrix " +
                     x.shape_string());
  }
  const std::size_t d = x.cols();
  Matrix out(adj.n, d);
  for (std::size_t i = 0; i < adj.n; ++i) {
    const double* xr = x.data() + i * d;
    for (std::size_t k = adj.row_ptr[i]; k < adj.row_ptr[i + 1]; ++k) {
      const double a = adj.val[k];
      double* o = out.data() + static_cast<std::size_t>(adj.col[k]) * d;
      for (std::size_t j = 0; j < d; ++j) o[j] += a * xr[j];
    }
  }
  return out;
}

}  // namespace fnorm
