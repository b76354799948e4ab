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
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fnorm/graph.hpp"

namespace fnorm {

struct TemporalRecord {
  NodeId src = 0;
  NodeId dst = 0;
  double weight = 1.0;
  std::int64_t timestamp = 0;  // seconds since the Unix epoch

  friend bool operator==(const TemporalRecord&,
                         const TemporalRecord&) = default;
};

// Timestamp-sorted interaction records with dense node ids.
//
// Dense ids are assigned in order of first appearance in the sorted stream
// (source before destination within a record), so node i's first-seen time
// is non-decreasing in i.
struct TemporalEdgeList {
  std::vector<TemporalRecord> records;
  std::vector<std::string> external_ids;  // dense id -> id as written in file

  std::size_t num_nodes() const noexcept { return external_ids.size(); }
};

enum class EdgeListFormat { kKonect };

// Whitespace-separated `src dst [weight] [timestamp]` lines; lines starting
// with '%' or '#' and blank lines are skipped. A missing weight is 1.0; a
// missing timestamp is replaced by the line's record ordinal. Ties keep file
// order. Throws ValidationError (with 1-based line number) on malformed
// lines, negative weights and negative timestamps; IoError if unreadable.
TemporalEdgeList load_edge_list(const std::filesystem::path& path,
                                EdgeListFormat format = EdgeListFormat::kKonect);
TemporalEdgeList parse_edge_list(std::istream& in,
                                 EdgeListFormat format = EdgeListFormat::kKonect);

struct SliceConfig {
  std::size_t target_edges_per_slice = 2000;
  // Once the target is reached, keep adding records from the same UTC day.
  bool day_boundary_rule = true;
  std::optional<std::size_t> max_steps;
};

// Greedy slicing: accumulate records until the slice holds at least the
// target count, optionally extend it to the end of the current UTC day, and
// cut. Records left over after the last full slice form a final, smaller
// slice. With max_steps set, records beyond the last permitted slice are
// dropped (a warning reports how many).
SnapshotSequence slice(const TemporalEdgeList& edges, const SliceConfig& cfg);

// Day index (UTC) of a Unix timestamp; floors for negative inputs.
std::int64_t utc_day(std::int64_t timestamp);

// Snapshot store:
//   <dir>/manifest.json   {"format": "fnorm-snapshots", "version": 1,
//                          "num_steps": T, "steps": [{"index", "num_nodes",
//                          "num_records", "file"}...]}
//   <dir>/step_XXXX.edges one "src dst weight" line per raw interval record
// Writing is deterministic: the same sequence always yields identical bytes.
inline constexpr int kSnapshotStoreVersion = 1;

void persist_snapshots(const SnapshotSequence& seq,
                       const std::filesystem::path& dir);
SnapshotSequence load_snapshots(const std::filesystem::path& dir);

}  // namespace fnorm
