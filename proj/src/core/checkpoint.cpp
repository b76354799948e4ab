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

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "fnorm/error.hpp"
#include "fnorm/models.hpp"

namespace fnorm {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'F', 'N', 'C', 'K', 'P', 'T', '0', '1'};
constexpr int kCheckpointVersion = 1;

std::string_view order_name(NormOrder o) {
  return o == NormOrder::kNormalizeThenCenter ? "normalize_then_center"
                                              : "center_then_normalize";
}

NormOrder parse_order(const std::string& s) {
  if (s == "normalize_then_center") return NormOrder::kNormalizeThenCenter;
  if (s == "center_then_normalize") return NormOrder::kCenterThenNormalize;
  throw IoError("unknown norm order '" + s + "' in checkpoint");
}

}  // namespace

void save_checkpoint(const ModelState& state, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  const auto params = state.parameters();
  const auto names = state.parameter_names();
  nlohmann::ordered_json header;
  header["format"] = "fnorm-checkpoint";
  header["version"] = kCheckpointVersion;
  header["framework"] = framework_name(state.spec.framework);
  header["dim"] = state.spec.dim;
  header["dropout"] = state.spec.dropout;
  header["norm"] = {{"kind", norm_variant_name(state.spec.norm.variant)},
                    {"scale", state.spec.norm.scale},
                    {"order", order_name(state.spec.norm.order)}};
  header["seed"] = meta.seed;
  header["extra"] = nlohmann::ordered_json::parse(meta.extra_json);
  header["arrays"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < params.size(); ++i) {
    header["arrays"].push_back({{"name", names[i]},
                                {"rows", params[i].rows()},
                                {"cols", params[i].cols()}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : params) {
    out.write(reinterpret_cast<const char*>(p.value().data()),
              static_cast<std::streamsize>(p.value().size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path,
                           CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 ||
      len > (1u << 26)) {
    throw IoError(path.string() + " is not an fnorm checkpoint");
  }
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError("truncated checkpoint header in " + path.string());
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("version").get<int>() != kCheckpointVersion) {
      throw IoError("unsupported checkpoint version in " + path.string());
    }
    ModelSpec spec;
    spec.framework = parse_framework(header.at("framework").get<std::string>());
    spec.dim = header.at("dim").get<std::size_t>();
    spec.dropout = header.at("dropout").get<double>();
    spec.norm.variant =
        parse_norm_variant(header.at("norm").at("kind").get<std::string>());
    spec.norm.scale = header.at("norm").at("scale").get<double>();
    spec.norm.order = parse_order(header.at("norm").at("order").get<std::string>());
    Rng unused(0);
    ModelState state = make_model(spec, unused);
    auto params = state.parameters();
    const auto names = state.parameter_names();
    const auto& arrays = header.at("arrays");
    if (arrays.size() != params.size()) {
      throw IoError("checkpoint array count does not match the framework");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto rows = arrays[i].at("rows").get<std::size_t>();
      const auto cols = arrays[i].at("cols").get<std::size_t>();
      if (arrays[i].at("name").get<std::string>() != names[i] ||
          rows != params[i].rows() || cols != params[i].cols()) {
        throw IoError("checkpoint array " + std::to_string(i) +
                      " has unexpected name or shape");
      }
      Matrix& v = params[i].mutable_value();
      in.read(reinterpret_cast<char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!in) throw IoError("truncated checkpoint data in " + path.string());
    if (meta) {
      meta->seed = header.at("seed").get<std::uint64_t>();
      meta->extra_json = header.at("extra").dump();
    }
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint header in " + path.string() + ": " +
                  e.what());
  }
}

}  // namespace fnorm
