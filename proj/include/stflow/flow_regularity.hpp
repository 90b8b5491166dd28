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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "stflow/grid.hpp"
#include "stflow/stats.hpp"
#include "stflow/trajectories.hpp"
#include "stflow/video_io.hpp"
#include "stflow/windows_norm.hpp"

namespace stflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Half-extent R of the square displacement search range for an N x N
/// patch: floor(N/6) rounded down to an even number.
inline int displacement_range(int patch_size) {
  if (patch_size < 6) throw Error("displacement_range: patch size must be >= 6");
  const int f = patch_size / 6;
  return f - f % 2;
}

/// Settings shared by the regularity scorers.
struct RegularityOptions {
  Binning binning{};
  double c = presets::kDivisiveC;
};

namespace detail {

/// Score of a set of normalized coefficients: KLD of their unit-variance
/// histogram against the discretized N(0, 1). An identically zero residual
/// is a perfect prediction and scores 0; a nonzero residual without
/// variance scores +inf.
inline double regularity_score(std::span<const double> raw, std::span<double> coeffs,
                               const Histogram& reference, const Binning& b) {
  if (std::all_of(raw.begin(), raw.end(), [](double v) { return v == 0.0; })) return 0.0;
  if (!(sample_variance(coeffs) > 0)) return kInf;
  unit_variance_inplace(coeffs);
  return kld(histogram(coeffs, b), reference);
}

}  // namespace detail

/// KLD regularity of one normalized difference volume (any kind); the
/// volume is divisively normalized, rescaled to unit variance and compared
/// to the Gaussian reference.
inline double volume_regularity(const Volume<double>& diffs, NormKind kind, const GaussianWindow& window,
                                const RegularityOptions& opt = {}) {
  NormalizedVolume nv = divisive_normalize(diffs, kind, window, opt.c);
  return detail::regularity_score(diffs.values(), nv.coeffs.values(), gaussian_reference(opt.binning),
                                  opt.binning);
}

/// (2R+1) x (2R+1) grid of KLD values indexed by displacement (x, y).
struct RegularityMap {
  int range = 0;
  Rect patch;
  int t0 = 0;
  int t = 1;
  NormKind norm_kind = NormKind::SDN;
  Grid<double> kld;

  int side() const noexcept { return 2 * range + 1; }
  double at(int dx, int dy) const noexcept { return kld(dx + range, dy + range); }
  double& at(int dx, int dy) noexcept { return kld(dx + range, dy + range); }

  std::size_t finite_count() const noexcept {
    std::size_t n = 0;
    for (double v : kld.values()) n += std::isfinite(v);
    return n;
  }

  /// Lowest finite entry; ties resolved by smaller |d|^2, then (x, y).
  Offset argmin() const {
    Offset best{};
    double best_v = kInf;
    bool found = false;
    for (int dy = -range; dy <= range; ++dy) {
      for (int dx = -range; dx <= range; ++dx) {
        const double v = at(dx, dy);
        if (!std::isfinite(v)) continue;
        const auto key = std::make_tuple(v, dx * dx + dy * dy, dx, dy);
        const auto cur = std::make_tuple(best_v, best.x * best.x + best.y * best.y, best.x, best.y);
        if (!found || key < cur) {
          best = {dx, dy};
          best_v = v;
          found = true;
        }
      }
    }
    if (!found) throw Error("regularity map has no finite entry");
    return best;
  }
};

/// Regularity map of a patch between frames t0 and t0 + t. Each entry
/// differences the patch against the frame displaced by (x, y), keeping the
/// patch pixels whose displaced partner lies inside the frame; the
/// difference is spatially normalized (SDN), rescaled to unit variance,
/// histogrammed and scored by KLD against N(0, 1). Entries with no overlap
/// or a constant nonzero difference are +inf.
inline RegularityMap regularity_map(const FrameSequence& seq, const Rect& patch, int t0, int t, int range,
                                    const RegularityOptions& opt = {},
                                    const GaussianWindow& window = spatial_window()) {
  if (range < 0) throw Error("regularity_map: range must be nonnegative");
  if (t < 1 || t0 < 0 || t0 + t >= seq.count()) throw Error("regularity_map: frame t0 + t does not exist");
  if (!inside(patch, seq.width(), seq.height())) throw Error("regularity_map: patch out of bounds");
  RegularityMap map{range, patch, t0, t, NormKind::SDN, Grid<double>(2 * range + 1, 2 * range + 1, kInf)};
  const Histogram reference = gaussian_reference(opt.binning);
  const Image& a = seq[t0];
  const Image& b = seq[t0 + t];
  const int w = seq.width(), h = seq.height();
  Volume<double> diff;
  for (int dy = -range; dy <= range; ++dy) {
    for (int dx = -range; dx <= range; ++dx) {
      const int x0 = std::max(patch.x, -dx), x1 = std::min(patch.x + patch.width, w - dx);
      const int y0 = std::max(patch.y, -dy), y1 = std::min(patch.y + patch.height, h - dy);
      if (x1 <= x0 || y1 <= y0) continue;
      if (diff.width() != x1 - x0 || diff.height() != y1 - y0) diff = Volume<double>(x1 - x0, y1 - y0, 1);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) diff(x - x0, y - y0, 0) = a(x, y) - b(x + dx, y + dy);
      NormalizedVolume nv = divisive_normalize(diff, NormKind::SDN, window, opt.c);
      map.at(dx, dy) = detail::regularity_score(diff.values(), nv.coeffs.values(), reference, opt.binning);
    }
  }
  return map;
}

/// Patch motion from a regularity map.
struct MotionEstimate {
  double u = 0;
  double v = 0;
  Rect patch;
  int set_size = 0;  // displacements averaged
};

inline constexpr double kMotionPercentile = 0.05;

/// Mean of the displacements whose KLD does not exceed the nearest-rank 5th
/// percentile of the finite map values (ties included).
inline MotionEstimate estimate_patch_motion(const RegularityMap& map, double percentile = kMotionPercentile) {
  std::vector<double> finite;
  for (double v : map.kld.values())
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) throw Error("estimate_patch_motion: all map entries are infinite");
  std::sort(finite.begin(), finite.end());
  const auto k = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(finite.size()) - 1e-9)));
  const double threshold = finite[std::min(k, finite.size()) - 1];
  MotionEstimate est{0, 0, map.patch, 0};
  for (int dy = -map.range; dy <= map.range; ++dy) {
    for (int dx = -map.range; dx <= map.range; ++dx) {
      const double v = map.at(dx, dy);
      if (std::isfinite(v) && v <= threshold) {
        est.u += dx;
        est.v += dy;
        ++est.set_size;
      }
    }
  }
  est.u /= est.set_size;
  est.v /= est.set_size;
  return est;
}

struct FlowEstimateOptions {
  int t = 1;
  int range = -1;  // negative: displacement_range(N)
  RegularityOptions regularity{};
};

struct TiledFlow {
  FlowField field;
  std::vector<MotionEstimate> patches;  // row-major tile order
  int range = 0;
};

/// Dense flow by tiling frame t0 into non-overlapping N x N patches. Each
/// tile's estimate is written to all of its pixels, divided by t to give
/// pixels/frame; pixels outside complete tiles are invalid.
inline TiledFlow estimate_flow_tiles(const FrameSequence& seq, int t0, int patch_size,
                                     const FlowEstimateOptions& opt = {}) {
  if (patch_size < 1) throw Error("patch size must be positive");
  if (t0 < 0 || t0 + opt.t >= seq.count()) throw Error("estimate_flow_field: frame t0 + t does not exist");
  const int tiles_x = seq.width() / patch_size, tiles_y = seq.height() / patch_size;
  if (tiles_x == 0 || tiles_y == 0) throw Error("estimate_flow_field: frame smaller than one tile");
  const int range = opt.range >= 0 ? opt.range : displacement_range(patch_size);
  TiledFlow out{FlowField(seq.width(), seq.height()), {}, range};
  std::fill(out.field.valid.values().begin(), out.field.valid.values().end(), std::uint8_t{0});
  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const Rect patch{tx * patch_size, ty * patch_size, patch_size, patch_size};
      const RegularityMap map = regularity_map(seq, patch, t0, opt.t, range, opt.regularity);
      MotionEstimate est = estimate_patch_motion(map);
      est.u /= opt.t;
      est.v /= opt.t;
      out.patches.push_back(est);
      for (int y = patch.y; y < patch.y + patch.height; ++y)
        for (int x = patch.x; x < patch.x + patch.width; ++x) out.field.set(x, y, est.u, est.v);
    }
  }
  return out;
}

inline FlowField estimate_flow_field(const FrameSequence& seq, int t0, int patch_size,
                                     const FlowEstimateOptions& opt = {}) {
  return estimate_flow_tiles(seq, t0, patch_size, opt).field;
}

struct TrajectorySearchOptions {
  int patch_size = 100;
  int depth = 10;
  std::vector<int> spacings{12, 6, 3, 1};
  int initial_radius = 2;  // (2r+1)^2 candidates at the first spacing
  int spatial_half_width = presets::kSpatialHalfWidth;
  int temporal_half_width = presets::kTemporalHalfWidthSearch;
  Differencing differencing = Differencing::Anchored;
  RegularityOptions regularity{};
};

struct SearchCandidate {
  Offset endpoint;
  double kld = kInf;
  int step = 0;
};

struct TrajectorySearchResult {
  Trajectory trajectory;
  Offset endpoint;
  double kld = kInf;
  std::vector<double> step_kld;  // incumbent KLD after each step
  std::vector<Offset> step_endpoint;
  std::vector<SearchCandidate> evaluated;
};

namespace detail {

inline bool candidate_less(const SearchCandidate& a, const SearchCandidate& b) {
  const auto key = [](const SearchCandidate& c) {
    return std::make_tuple(c.kld, c.endpoint.x * c.endpoint.x + c.endpoint.y * c.endpoint.y, c.endpoint.x,
                           c.endpoint.y);
  };
  return key(a) < key(b);
}

}  // namespace detail

/// Coarse-to-fine search over straight space-time paths. Step one scores
/// the endpoints {-2s..2s}^2 at the first spacing s; every later step scores
/// the 3x3 neighbourhood of the incumbent at the next spacing. A path is the
/// straight line from the patch at t0 to its endpoint at t0 + depth; its
/// difference volume is normalized (TDN or STDN), rescaled to unit variance
/// and scored by KLD. Candidates whose path leaves the frame are skipped.
inline TrajectorySearchResult four_step_trajectory_search(const FrameSequence& seq, int origin_x, int origin_y,
                                                          int t0, NormKind kind,
                                                          const TrajectorySearchOptions& opt = {}) {
  if (kind != NormKind::TDN && kind != NormKind::STDN)
    throw Error("four_step_trajectory_search: normalization must be TDN or STDN");
  if (opt.spacings.empty()) throw Error("four_step_trajectory_search: no step spacings");
  if (t0 < 0 || t0 + opt.depth >= seq.count())
    throw Error("four_step_trajectory_search: need " + std::to_string(opt.depth) + " frames after t0");
  const GaussianWindow window =
      kind == NormKind::TDN
          ? temporal_window(opt.temporal_half_width)
          : space_time_window(opt.spatial_half_width, opt.spatial_half_width, opt.temporal_half_width);
  const Histogram reference = gaussian_reference(opt.regularity.binning);

  TrajectorySearchResult res;
  auto score = [&](Offset end, int step) -> SearchCandidate {
    for (const auto& c : res.evaluated)
      if (c.endpoint == end) return c;
    SearchCandidate cand{end, kInf, step};
    const Trajectory tr = straight_trajectory(origin_x, origin_y, t0, opt.depth, end.x, end.y);
    bool in_bounds = true;
    for (const auto& o : tr.offsets)
      in_bounds = in_bounds && inside({origin_x + o.x, origin_y + o.y, opt.patch_size, opt.patch_size},
                                      seq.width(), seq.height());
    if (in_bounds) {
      const FrameDiffVolume vol = collect_volume(seq, tr, opt.patch_size, opt.differencing);
      NormalizedVolume nv = divisive_normalize(vol.diffs, kind, window, opt.regularity.c);
      cand.kld = detail::regularity_score(vol.diffs.values(), nv.coeffs.values(), reference,
                                          opt.regularity.binning);
    }
    res.evaluated.push_back(cand);
    return cand;
  };

  if (!inside({origin_x, origin_y, opt.patch_size, opt.patch_size}, seq.width(), seq.height()))
    throw Error("four_step_trajectory_search: patch out of bounds at t0");

  SearchCandidate incumbent;
  bool have = false;
  for (std::size_t s = 0; s < opt.spacings.size(); ++s) {
    const int spacing = opt.spacings[s];
    const int radius = s == 0 ? opt.initial_radius : 1;
    const Offset center = s == 0 ? Offset{} : incumbent.endpoint;
    for (int j = -radius; j <= radius; ++j) {
      for (int i = -radius; i <= radius; ++i) {
        const SearchCandidate c =
            score({center.x + i * spacing, center.y + j * spacing}, static_cast<int>(s) + 1);
        if (!std::isfinite(c.kld)) continue;
        if (!have || detail::candidate_less(c, incumbent)) {
          incumbent = c;
          have = true;
        }
      }
    }
    if (!have) throw Error("four_step_trajectory_search: every candidate path leaves the frame");
    res.step_kld.push_back(incumbent.kld);
    res.step_endpoint.push_back(incumbent.endpoint);
  }
  res.endpoint = incumbent.endpoint;
  res.kld = incumbent.kld;
  res.trajectory =
      straight_trajectory(origin_x, origin_y, t0, opt.depth, incumbent.endpoint.x, incumbent.endpoint.y);
  return res;
}

/// Rows y = -R..R, columns x = -R..R; infinite entries written as "inf".
inline std::string regularity_map_csv(const RegularityMap& map) {
  std::string out;
  char buf[64];
  for (int dy = -map.range; dy <= map.range; ++dy) {
    for (int dx = -map.range; dx <= map.range; ++dx) {
      const double v = map.at(dx, dy);
      if (std::isfinite(v)) std::snprintf(buf, sizeof buf, "%.17g", v);
      else std::snprintf(buf, sizeof buf, "inf");
      out += buf;
      out += dx == map.range ? '\n' : ',';
    }
  }
  return out;
}

struct MapImage {
  Grid<std::uint16_t> pixels;
  double min = 0;
  double max = 0;
};

/// Min-max scale finite entries to [0, 65535]; infinite entries map to 65535.
inline MapImage regularity_map_image(const RegularityMap& map) {
  MapImage img{Grid<std::uint16_t>(map.side(), map.side()), kInf, -kInf};
  for (double v : map.kld.values()) {
    if (!std::isfinite(v)) continue;
    img.min = std::min(img.min, v);
    img.max = std::max(img.max, v);
  }
  if (!std::isfinite(img.min)) img.min = img.max = 0;
  const double span = img.max - img.min;
  for (int y = 0; y < map.side(); ++y) {
    for (int x = 0; x < map.side(); ++x) {
      const double v = map.kld(x, y);
      double s = !std::isfinite(v) ? 1.0 : span > 0 ? (v - img.min) / span : 0.0;
      img.pixels(x, y) = static_cast<std::uint16_t>(std::lround(s * 65535.0));
    }
  }
  return img;
}

}  // namespace stflow
