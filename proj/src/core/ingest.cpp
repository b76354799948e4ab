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

#include "fnorm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fnorm/error.hpp"
#include "fnorm/log.hpp"

namespace fnorm {
namespace {

namespace fs = std::filesystem;

struct RawRecord {
  std::string src;
  std::string dst;
  double weight;
  std::int64_t timestamp;
};

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() &&
         std::isfinite(out);
}

bool parse_timestamp(std::string_view s, std::int64_t& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec == std::errc() && res.ptr == s.data() + s.size()) return true;
  double d = 0.0;
  if (!parse_double(s, d) || std::abs(d) > 9.0e18) return false;
  out = static_cast<std::int64_t>(std::llround(d));
  return true;
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
  throw ValidationError("line " + std::to_string(line_no) + ": " + what);
}

std::string format_weight(double w) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), w);
  return std::string(buf, res.ptr);
}

std::string step_file_name(std::size_t t) {
  std::ostringstream os;
  os << "step_" << std::setw(4) << std::setfill('0') << t << ".edges";
  return os.str();
}

}  // namespace

std::int64_t utc_day(std::int64_t timestamp) {
  constexpr std::int64_t kDay = 86400;
  std::int64_t q = timestamp / kDay;
  if (timestamp % kDay != 0 && timestamp < 0) --q;
  return q;
}

TemporalEdgeList parse_edge_list(std::istream& in, EdgeListFormat format) {
  if (format != EdgeListFormat::kKonect) {
    throw UnsupportedError("unsupported edge list format");
  }
  std::vector<RawRecord> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty() || fields[0].front() == '%' || fields[0].front() == '#')
      continue;
    if (fields.size() < 2 || fields.size() > 4) {
      fail_line(line_no, "expected 2 to 4 columns, found " +
                             std::to_string(fields.size()));
    }
    RawRecord r{std::string(fields[0]), std::string(fields[1]), 1.0,
                static_cast<std::int64_t>(raw.size())};
    if (fields.size() >= 3 && !parse_double(fields[2], r.weight)) {
      fail_line(line_no, "malformed weight '" + std::string(fields[2]) + "'");
    }
    if (r.weight < 0.0) fail_line(line_no, "negative weight");
    if (fields.size() == 4) {
      if (!parse_timestamp(fields[3], r.timestamp)) {
        fail_line(line_no,
                  "malformed timestamp '" + std::string(fields[3]) + "'");
      }
      if (r.timestamp < 0) fail_line(line_no, "negative timestamp");
    }
    raw.push_back(std::move(r));
  }
  if (in.bad()) throw IoError("read error while parsing edge list");

  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawRecord& a, const RawRecord& b) {
                     return a.timestamp < b.timestamp;
                   });

  TemporalEdgeList out;
  out.records.reserve(raw.size());
  std::unordered_map<std::string, NodeId> ids;
  auto intern = [&](const std::string& ext) {
    auto [it, inserted] =
        ids.try_emplace(ext, static_cast<NodeId>(out.external_ids.size()));
    if (inserted) out.external_ids.push_back(ext);
    return it->second;
  };
  for (const RawRecord& r : raw) {
    const NodeId s = intern(r.src);
    const NodeId d = intern(r.dst);
    out.records.push_back({s, d, r.weight, r.timestamp});
  }
  return out;
}

TemporalEdgeList load_edge_list(const fs::path& path, EdgeListFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list " + path.string());
  try {
    return parse_edge_list(in, format);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

SnapshotSequence slice(const TemporalEdgeList& edges, const SliceConfig& cfg) {
  if (cfg.target_edges_per_slice == 0) {
    throw ValidationError("target_edges_per_slice must be at least 1");
  }
  if (cfg.max_steps && *cfg.max_steps == 0) {
    throw ValidationError("max_steps must be at least 1 when set");
  }
  const auto& recs = edges.records;
  if (recs.empty()) throw ValidationError("cannot slice an empty edge list");
  if (cfg.target_edges_per_slice > recs.size()) {
    log_warning("slice target " + std::to_string(cfg.target_edges_per_slice) +
                " exceeds the " + std::to_string(recs.size()) +
                " available records; producing a single snapshot");
  }

  // Cut positions [begin, end) per slice.
  std::vector<std::pair<std::size_t, std::size_t>> cuts;
  std::size_t begin = 0;
  while (begin < recs.size()) {
    if (cfg.max_steps && cuts.size() == *cfg.max_steps) break;
    std::size_t end =
        std::min(recs.size(), begin + cfg.target_edges_per_slice);
    if (cfg.day_boundary_rule) {
      const std::int64_t day = utc_day(recs[end - 1].timestamp);
      while (end < recs.size() && utc_day(recs[end].timestamp) == day) ++end;
    }
    cuts.emplace_back(begin, end);
    begin = end;
  }
  if (begin < recs.size()) {
    log_warning("max_steps reached; dropping " +
                std::to_string(recs.size() - begin) + " trailing records");
  }

  SnapshotSequence seq;
  seq.reserve(cuts.size());
  std::vector<std::size_t> first_seen;
  std::size_t num_nodes = 0;
  for (std::size_t t = 0; t < cuts.size(); ++t) {
    const auto [b, e] = cuts[t];
    std::vector<Edge> interval;
    interval.reserve(e - b);
    for (std::size_t k = b; k < e; ++k) {
      const TemporalRecord& r = recs[k];
      interval.push_back({r.src, r.dst, r.weight});
      num_nodes = std::max<std::size_t>(
          num_nodes, static_cast<std::size_t>(std::max(r.src, r.dst)) + 1);
    }
    first_seen.resize(num_nodes, t);
    seq.push_back(build_snapshot(t, std::move(interval), num_nodes, first_seen));
  }
  return seq;
}

void persist_snapshots(const SnapshotSequence& seq, const fs::path& dir) {
  validate_sequence(seq);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::ordered_json manifest;
  manifest["format"] = "fnorm-snapshots";
  manifest["version"] = kSnapshotStoreVersion;
  manifest["num_steps"] = seq.size();
  manifest["steps"] = nlohmann::ordered_json::array();
  for (const Snapshot& s : seq) {
    const std::string name = step_file_name(s.index());
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    for (const Edge& e : s.records())
      out << e.src << ' ' << e.dst << ' ' << format_weight(e.weight) << '\n';
    if (!out) throw IoError("write failed for " + (dir / name).string());
    manifest["steps"].push_back({{"index", s.index()},
                                 {"num_nodes", s.num_nodes()},
                                 {"num_records", s.records().size()},
                                 {"file", name}});
  }
  std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!mf) throw IoError("cannot write manifest in " + dir.string());
  mf << manifest.dump(2) << '\n';
}

SnapshotSequence load_snapshots(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::is_directory(dir)) {
    throw IoError("snapshot store " + dir.string() + " does not exist");
  }
  if (!fs::exists(manifest_path)) {
    throw IoError("snapshot store " + dir.string() + " has no manifest.json");
  }
  nlohmann::json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " +
                  e.what());
  }
  try {
    if (manifest.at("format").get<std::string>() != "fnorm-snapshots") {
      throw IoError(manifest_path.string() + " is not a snapshot manifest");
    }
    const int version = manifest.at("version").get<int>();
    if (version != kSnapshotStoreVersion) {
      throw IoError("snapshot store version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kSnapshotStoreVersion) + ")");
    }
    const auto num_steps = manifest.at("num_steps").get<std::size_t>();
    const auto& steps = manifest.at("steps");
    if (steps.size() != num_steps || num_steps == 0) {
      throw IoError("manifest step list does not match num_steps");
    }
    SnapshotSequence seq;
    std::vector<std::size_t> first_seen;
    for (std::size_t t = 0; t < num_steps; ++t) {
      const auto& st = steps[t];
      const auto n = st.at("num_nodes").get<std::size_t>();
      const auto expected = st.at("num_records").get<std::size_t>();
      const fs::path file = dir / st.at("file").get<std::string>();
      std::ifstream in(file);
      if (!in) throw IoError("cannot open " + file.string());
      std::vector<Edge> edges;
      edges.reserve(expected);
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        const auto f = split_ws(line);
        if (f.empty()) continue;
        Edge e;
        double w = 0.0;
        unsigned long src = 0, dst = 0;
        if (f.size() != 3 ||
            std::from_chars(f[0].data(), f[0].data() + f[0].size(), src).ec !=
                std::errc() ||
            std::from_chars(f[1].data(), f[1].data() + f[1].size(), dst).ec !=
                std::errc() ||
            !parse_double(f[2], w)) {
          throw IoError(file.string() + ":" + std::to_string(line_no) +
                        ": malformed edge line");
        }
        e.src = static_cast<NodeId>(src);
        e.dst = static_cast<NodeId>(dst);
        e.weight = w;
        edges.push_back(e);
      }
      if (edges.size() != expected) {
        throw IoError(file.string() + " holds " + std::to_string(edges.size()) +
                      " records, manifest says " + std::to_string(expected));
      }
      if (n < first_seen.size()) {
        throw ValidationError("node count decreases at step " +
                              std::to_string(t));
      }
      first_seen.resize(n, t);
      seq.push_back(build_snapshot(t, std::move(edges), n, first_seen));
    }
    return seq;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " +
                  e.what());
  }
}

}  // namespace fnorm
