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

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "stflow/grid.hpp"
#include "stflow/video_io.hpp"

namespace stflow {

/// Space-time displacement: spatial (x, y) in pixels over t frames.
struct Displacement {
  int x = 0;
  int y = 0;
  int t = 1;

  bool operator==(const Displacement&) const = default;
};

struct Offset {
  int x = 0;
  int y = 0;

  bool operator==(const Offset&) const = default;
};

enum class TrajectoryKind { Motion, NonDisplaced, Random };

inline std::string_view to_string(TrajectoryKind k) noexcept {
  switch (k) {
    case TrajectoryKind::Motion: return "motion";
    case TrajectoryKind::NonDisplaced: return "non-displaced";
    case TrajectoryKind::Random: return "random";
  }
  return "?";
}

inline TrajectoryKind parse_trajectory_kind(std::string_view s) {
  if (s == "motion") return TrajectoryKind::Motion;
  if (s == "non-displaced" || s == "nondisplaced" || s == "static") return TrajectoryKind::NonDisplaced;
  if (s == "random") return TrajectoryKind::Random;
  throw Error("unknown trajectory kind: " + std::string(s));
}

/// Identifier of the random-trajectory generator, recorded in manifests:
/// std::mt19937_64 seeded with the 64-bit seed; each component drawn as
/// (r mod (2R+1)) - R with rejection of r >= floor(2^64 / (2R+1)) * (2R+1);
/// x drawn before y at every step.
inline constexpr std::string_view kRandomTrajectoryAlgorithm = "mt19937_64/rejection-mod/xy";

/// Per-step spatial offsets of a patch relative to its position in frame t0.
/// offsets[k] is the displacement reached at frame t0 + k + 1.
struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::NonDisplaced;
  int origin_x = 0;  // patch top-left at frame t0
  int origin_y = 0;
  int t0 = 0;
  std::vector<Offset> offsets;
  std::uint64_t seed = 0;  // Random only
  int drift_bound = 0;     // Random only

  int depth() const noexcept { return static_cast<int>(offsets.size()); }
};

/// Nearest integer, ties toward +infinity.
inline int round_half_up(double v) noexcept { return static_cast<int>(std::floor(v + 0.5)); }

/// Displaced difference I_t0(i, j) - I_{t0+t}(i + x, j + y) over a patch.
/// Both the patch and its displaced copy must lie inside the frame.
inline Image displaced_frame_difference(const FrameSequence& seq, int t0, const Displacement& d,
                                        const Rect& patch) {
  if (d.t < 1) throw Error("temporal displacement must be >= 1");
  if (t0 < 0 || t0 + d.t >= seq.count()) throw Error("frame index out of range for displacement");
  const Rect moved{patch.x + d.x, patch.y + d.y, patch.width, patch.height};
  if (!inside(patch, seq.width(), seq.height()) || !inside(moved, seq.width(), seq.height()))
    throw Error("displaced patch out of bounds");
  const Image& a = seq[t0];
  const Image& b = seq[t0 + d.t];
  Image out(patch.width, patch.height);
  for (int j = 0; j < patch.height; ++j)
    for (int i = 0; i < patch.width; ++i)
      out(i, j) = a(patch.x + i, patch.y + j) - b(moved.x + i, moved.y + j);
  return out;
}

inline Trajectory non_displaced_trajectory(int origin_x, int origin_y, int t0, int depth) {
  if (depth < 1) throw Error("trajectory depth must be >= 1");
  Trajectory tr;
  tr.kind = TrajectoryKind::NonDisplaced;
  tr.origin_x = origin_x;
  tr.origin_y = origin_y;
  tr.t0 = t0;
  tr.offsets.assign(static_cast<std::size_t>(depth), Offset{});
  return tr;
}

/// Follow per-frame flow from the sample point (origin + anchor). flows[k]
/// maps frame t0 + k to t0 + k + 1 and is sampled at the rounded traced
/// position; the offset after each step is the rounded accumulated
/// displacement. Tracing stops early if flow becomes invalid after the
/// first step.
inline Trajectory motion_trajectory(int origin_x, int origin_y, int t0, int depth,
                                    const std::vector<FlowField>& flows, int anchor_x = 0,
                                    int anchor_y = 0) {
  if (depth < 1) throw Error("trajectory depth must be >= 1");
  if (static_cast<int>(flows.size()) < depth)
    throw Error("motion trajectory needs one flow field per frame step");
  Trajectory tr;
  tr.kind = TrajectoryKind::Motion;
  tr.origin_x = origin_x;
  tr.origin_y = origin_y;
  tr.t0 = t0;
  double px = origin_x + anchor_x, py = origin_y + anchor_y;
  double acc_x = 0, acc_y = 0;
  for (int k = 0; k < depth; ++k) {
    const FlowField& f = flows[static_cast<std::size_t>(k)];
    const int sx = round_half_up(px), sy = round_half_up(py);
    if (!f.u.contains(sx, sy)) throw Error("traced position exits the frame at step " + std::to_string(k));
    if (!f.is_valid(sx, sy)) {
      if (k == 0) throw Error("invalid flow at trajectory origin");
      break;
    }
    acc_x += f.u(sx, sy);
    acc_y += f.v(sx, sy);
    px += f.u(sx, sy);
    py += f.v(sx, sy);
    tr.offsets.push_back({round_half_up(acc_x), round_half_up(acc_y)});
  }
  return tr;
}

namespace detail {

inline int uniform_symmetric(std::mt19937_64& rng, int bound) {
  const std::uint64_t n = 2 * static_cast<std::uint64_t>(bound) + 1;
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<int>(r % n) - bound;
}

}  // namespace detail

/// Random walk whose per-step increments are i.i.d. uniform on the integer
/// lattice [-R, R]^2; see kRandomTrajectoryAlgorithm.
inline Trajectory random_trajectory(int origin_x, int origin_y, int t0, int depth, std::uint64_t seed,
                                    int drift_bound) {
  if (depth < 1) throw Error("trajectory depth must be >= 1");
  if (drift_bound < 0) throw Error("random drift bound must be nonnegative");
  Trajectory tr;
  tr.kind = TrajectoryKind::Random;
  tr.origin_x = origin_x;
  tr.origin_y = origin_y;
  tr.t0 = t0;
  tr.seed = seed;
  tr.drift_bound = drift_bound;
  std::mt19937_64 rng(seed);
  Offset pos;
  for (int k = 0; k < depth; ++k) {
    pos.x += detail::uniform_symmetric(rng, drift_bound);
    pos.y += detail::uniform_symmetric(rng, drift_bound);
    tr.offsets.push_back(pos);
  }
  return tr;
}

/// Straight path reaching (end_x, end_y) at frame t0 + depth; per-frame
/// positions rounded half-up.
inline Trajectory straight_trajectory(int origin_x, int origin_y, int t0, int depth, int end_x, int end_y) {
  if (depth < 1) throw Error("trajectory depth must be >= 1");
  Trajectory tr;
  tr.kind = TrajectoryKind::Motion;
  tr.origin_x = origin_x;
  tr.origin_y = origin_y;
  tr.t0 = t0;
  for (int k = 1; k <= depth; ++k)
    tr.offsets.push_back({round_half_up(static_cast<double>(end_x) * k / depth),
                          round_half_up(static_cast<double>(end_y) * k / depth)});
  return tr;
}

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::NonDisplaced;
  int origin_x = 0;
  int origin_y = 0;
  int t0 = 0;
  int depth = 1;
  std::uint64_t seed = 0;
  int drift_bound = 20;
  int anchor_x = 0;
  int anchor_y = 0;
};

inline Trajectory make_trajectory(const TrajectorySpec& s, const std::vector<FlowField>& flows = {}) {
  switch (s.kind) {
    case TrajectoryKind::NonDisplaced: return non_displaced_trajectory(s.origin_x, s.origin_y, s.t0, s.depth);
    case TrajectoryKind::Motion:
      return motion_trajectory(s.origin_x, s.origin_y, s.t0, s.depth, flows, s.anchor_x, s.anchor_y);
    case TrajectoryKind::Random:
      return random_trajectory(s.origin_x, s.origin_y, s.t0, s.depth, s.seed, s.drift_bound);
  }
  throw Error("unknown trajectory kind");
}

/// How the slices of a difference volume pair frames along a trajectory.
/// Stepwise: slice k differences the traced patch in frame t0 + k against
/// its traced position in frame t0 + k + 1 (the k-th frame step).
/// Anchored: slice k differences the patch in frame t0 against frame
/// t0 + k + 1 displaced by offsets[k] (a displacement (x, y, k + 1) from t0).
enum class Differencing { Stepwise, Anchored };

struct FrameDiffVolume {
  Volume<double> diffs;
  Trajectory trajectory;  // offsets truncated to the collected depth

  int depth() const noexcept { return diffs.depth(); }
};

/// Position of the traced patch before step k (offset 0 at t0).
inline Offset offset_before(const Trajectory& traj, int k) {
  return k == 0 ? Offset{} : traj.offsets[static_cast<std::size_t>(k - 1)];
}

/// Collect a patch_w x patch_h difference volume along a trajectory. Stops
/// at the first step whose traced patch leaves the frame or the clip.
inline FrameDiffVolume collect_volume(const FrameSequence& seq, const Trajectory& traj, int patch_w,
                                      int patch_h, Differencing mode = Differencing::Stepwise) {
  if (patch_w < 1 || patch_h < 1) throw Error("patch size must be positive");
  const Rect patch{traj.origin_x, traj.origin_y, patch_w, patch_h};
  if (!inside(patch, seq.width(), seq.height())) throw Error("patch out of bounds at t0");
  int depth = 0;
  for (const auto& o : traj.offsets) {
    const Rect moved{patch.x + o.x, patch.y + o.y, patch_w, patch_h};
    if (traj.t0 + depth + 1 >= seq.count() || !inside(moved, seq.width(), seq.height())) break;
    ++depth;
  }
  if (depth == 0) throw Error("displaced patch out of bounds at the first trajectory step");
  FrameDiffVolume out{Volume<double>(patch_w, patch_h, depth), traj};
  out.trajectory.offsets.resize(static_cast<std::size_t>(depth));
  for (int k = 0; k < depth; ++k) {
    const Offset from = mode == Differencing::Stepwise ? offset_before(traj, k) : Offset{};
    const int base_t = mode == Differencing::Stepwise ? traj.t0 + k : traj.t0;
    const Offset to = traj.offsets[static_cast<std::size_t>(k)];
    const Rect base{patch.x + from.x, patch.y + from.y, patch_w, patch_h};
    out.diffs.set_slice(k, displaced_frame_difference(seq, base_t, {to.x - from.x, to.y - from.y, traj.t0 + k + 1 - base_t}, base));
  }
  return out;
}

inline FrameDiffVolume collect_volume(const FrameSequence& seq, const Trajectory& traj, int patch_size,
                                      Differencing mode = Differencing::Stepwise) {
  return collect_volume(seq, traj, patch_size, patch_size, mode);
}

inline double mean_abs(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += std::fabs(x);
  return s / static_cast<double>(v.size());
}

}  // namespace stflow
