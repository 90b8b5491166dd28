// Copyright (c) the stflow authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON / raw-volume serialization for the CLI and for callers that want
// the same file formats.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "stflow/evaluation.hpp"
#include "stflow/flow_regularity.hpp"
#include "stflow/stats.hpp"
#include "stflow/trajectories.hpp"
#include "stflow/windows_norm.hpp"

namespace stflow {

using json = nlohmann::ordered_json;

inline json to_json(const GgdFit& f) {
  return {{"alpha", f.alpha}, {"variance", f.variance}, {"beta", f.beta}};
}

inline json to_json(const Trajectory& t) {
  json offsets = json::array();
  for (const auto& o : t.offsets) offsets.push_back({o.x, o.y});
  json j = {{"kind", std::string(to_string(t.kind))},
            {"origin", {t.origin_x, t.origin_y, t.t0}},
            {"offsets", offsets}};
  if (t.kind == TrajectoryKind::Random) {
    j["seed"] = t.seed;
    j["drift_bound"] = t.drift_bound;
    j["random_algorithm"] = std::string(kRandomTrajectoryAlgorithm);
  }
  return j;
}

inline json to_json(const EvalReport& r) {
  json j = {{"mean_ae", r.mean_ae}, {"mean_ee", r.mean_ee}, {"pixel_count", r.pixel_count}};
  if (!r.per_patch.empty()) {
    json rows = json::array();
    for (const auto& p : r.per_patch)
      rows.push_back({{"origin", {p.patch.x, p.patch.y}},
                      {"size", {p.patch.width, p.patch.height}},
                      {"ae", p.ae},
                      {"ee", p.ee},
                      {"pixels", p.pixels}});
    j["per_patch"] = rows;
  }
  return j;
}

/// Sweep tabulation row `N,range,AE,EE`; range is the half-extent R.
inline std::string eval_csv_row(int patch_size, int range, const EvalReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f\n", patch_size, range, r.mean_ae, r.mean_ee);
  return buf;
}

inline constexpr std::string_view kEvalCsvHeader = "N,range,AE,EE\n";

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

/// Planar little-endian float32 dump (slice after slice, rows top to
/// bottom) plus a JSON sidecar with the dimensions and `extra` fields.
inline void write_volume_raw(const Volume<double>& v, const std::filesystem::path& raw_path, json extra = json::object()) {
  std::vector<unsigned char> bytes;
  bytes.reserve(v.size() * 4);
  for (double x : v.values()) detail::store_le(bytes, static_cast<float>(x));
  detail::write_bytes(raw_path, bytes);
  json side = {{"file", raw_path.filename().string()},
               {"format", "float32-le planar"},
               {"width", v.width()},
               {"height", v.height()},
               {"depth", v.depth()}};
  for (auto& [k, val] : extra.items()) side[k] = val;
  auto sidecar = raw_path;
  sidecar.replace_extension(".json");
  write_json(sidecar, side);
}

inline Volume<double> read_volume_raw(const std::filesystem::path& raw_path, int width, int height, int depth) {
  const auto bytes = detail::read_file(raw_path);
  Volume<double> v(width, height, depth);
  if (bytes.size() != v.size() * 4) throw Error(raw_path.string() + ": size does not match dimensions");
  auto vals = v.values();
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = detail::load_le<float>(bytes.data() + 4 * i);
  return v;
}

}  // namespace stflow
