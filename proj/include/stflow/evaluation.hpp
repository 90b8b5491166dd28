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
#include <numbers>
#include <optional>
#include <vector>

#include "stflow/grid.hpp"
#include "stflow/video_io.hpp"

namespace stflow {

/// Angle in degrees between (u_est, v_est, 1) and (u_gt, v_gt, 1). Same
/// value as the clamped arccos of the normalized dot product, evaluated as
/// atan2(|a x b|, a . b) so that equal vectors give exactly 0.
inline double angular_error(double ue, double ve, double ug, double vg) {
  const double cx = ve - vg, cy = ug - ue, cz = ue * vg - ve * ug;
  const double dot = ue * ug + ve * vg + 1.0;
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot) * 180.0 / std::numbers::pi;
}

inline double endpoint_error(double ue, double ve, double ug, double vg) {
  return std::hypot(ue - ug, ve - vg);
}

struct PatchError {
  Rect patch;
  double ae = 0;
  double ee = 0;
  std::size_t pixels = 0;
};

struct EvalReport {
  double mean_ae = 0;  // degrees
  double mean_ee = 0;  // pixels
  std::size_t pixel_count = 0;
  std::vector<PatchError> per_patch;
};

/// Unweighted means of per-pixel AE/EE over pixels valid in both fields.
/// When patches are given, per-patch means over their jointly valid pixels
/// are reported as well (patches with none are omitted).
inline EvalReport evaluate_field(const FlowField& est, const FlowField& gt, const std::vector<Rect>& patches = {}) {
  if (est.width() != gt.width() || est.height() != gt.height())
    throw Error("evaluate_field: dimension mismatch (" + std::to_string(est.width()) + "x" +
                std::to_string(est.height()) + " vs " + std::to_string(gt.width()) + "x" +
                std::to_string(gt.height()) + ")");
  EvalReport r;
  auto accumulate = [&](int x0, int y0, int x1, int y1, double& ae, double& ee) {
    std::size_t n = 0;
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        if (!est.is_valid(x, y) || !gt.is_valid(x, y)) continue;
        ae += angular_error(est.u(x, y), est.v(x, y), gt.u(x, y), gt.v(x, y));
        ee += endpoint_error(est.u(x, y), est.v(x, y), gt.u(x, y), gt.v(x, y));
        ++n;
      }
    }
    return n;
  };
  double ae = 0, ee = 0;
  r.pixel_count = accumulate(0, 0, est.width(), est.height(), ae, ee);
  if (r.pixel_count == 0) throw Error("evaluate_field: no jointly valid pixels");
  r.mean_ae = ae / static_cast<double>(r.pixel_count);
  r.mean_ee = ee / static_cast<double>(r.pixel_count);
  for (const Rect& p : patches) {
    const int x0 = std::max(p.x, 0), y0 = std::max(p.y, 0);
    const int x1 = std::min(p.x + p.width, est.width()), y1 = std::min(p.y + p.height, est.height());
    PatchError pe{p};
    pe.pixels = accumulate(x0, y0, x1, y1, pe.ae, pe.ee);
    if (pe.pixels == 0) continue;
    pe.ae /= static_cast<double>(pe.pixels);
    pe.ee /= static_cast<double>(pe.pixels);
    r.per_patch.push_back(pe);
  }
  return r;
}

}  // namespace stflow
