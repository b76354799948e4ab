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

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fnorm/matrix.hpp"

namespace fnorm {

using NodeId = std::uint32_t;

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Unordered node pair with first <= second.
using NodePair = std::pair<NodeId, NodeId>;

inline NodePair canonical_pair(NodeId a, NodeId b) {
  return a <= b ? NodePair{a, b} : NodePair{b, a};
}

// One time-sliced graph: cumulative node set, interval edge set.
//
// `records()` keeps the interval's raw edges in arrival order (this is what
// is persisted). `edges()` is the merged view used for adjacency
// construction: endpoints canonicalized so that (u,v) and (v,u) collapse,
// duplicates merged by weight summation, sorted by (src, dst).
class Snapshot {
 public:
  Snapshot() = default;

  std::size_t index() const noexcept { return index_; }
  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::span<const Edge> records() const noexcept { return records_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  // Per node, the 0-based step at which it first appeared.
  std::span<const std::size_t> node_first_seen() const noexcept {
    return first_seen_;
  }

  // Distinct non-loop node pairs of this interval, in sorted order. These
  // are the positive pairs for link prediction.
  std::vector<NodePair> link_pairs() const;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;

 private:
  friend Snapshot build_snapshot(std::size_t, std::vector<Edge>, std::size_t,
                                 std::vector<std::size_t>);
  std::size_t index_ = 0;
  std::size_t num_nodes_ = 0;
  std::vector<Edge> records_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> first_seen_;
};

using SnapshotSequence = std::vector<Snapshot>;

// Validates and merges an interval edge list. `first_seen` may be empty, in
// which case every node is marked as first seen at `index`.
// Throws ValidationError for out-of-range endpoints, negative or non-finite
// weights, and malformed `first_seen`.
Snapshot build_snapshot(std::size_t index, std::vector<Edge> edges,
                        std::size_t num_nodes,
                        std::vector<std::size_t> first_seen = {});

// Checks the cross-snapshot invariants (consecutive indices, non-decreasing
// node counts, consistent first-seen steps).
void validate_sequence(const SnapshotSequence& seq);

enum class AdjacencyFlavor { kSymmetric, kRowStochastic };

// Sparse normalized adjacency in CSR form with sorted column indices.
struct NormalizedAdjacency {
  std::size_t n = 0;
  AdjacencyFlavor flavor = AdjacencyFlavor::kSymmetric;
  std::vector<std::size_t> row_ptr;  // size n + 1
  std::vector<NodeId> col;
  std::vector<double> val;
  // Degrees of the (possibly augmented) adjacency the entries were divided
  // by; needed to symmetrize a row-stochastic operator.
  std::vector<double> degree;

  std::size_t nnz() const noexcept { return val.size(); }
  Matrix to_dense() const;
};

// D̃^{-1/2} (A + I) D̃^{-1/2}, D̃ = D + I. Edges are mirrored.
NormalizedAdjacency symmetric_normalize(const Snapshot& s);

// D̃^{-1} (A + I); every row sums to one.
NormalizedAdjacency row_normalize(const Snapshot& s);

// D^{-1} A without self-loop augmentation (random-walk transition matrix).
// Isolated nodes get a unit self-loop so that the result stays
// row-stochastic.
NormalizedAdjacency transition_normalize(const Snapshot& s);

// adj * x. Accumulates each output row in column-index order.
Matrix spmm(const NormalizedAdjacency& adj, const Matrix& x);

// adj^T * x.
Matrix spmm_transposed(const NormalizedAdjacency& adj, const Matrix& x);

}  // namespace fnorm
