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
#include <vector>

#include "stflow/grid.hpp"
#include "stflow/video_io.hpp"
#include "stflow/windows_norm.hpp"

namespace stflow {

struct HsParams {
  double smoothness_weight = 1.0;  // alpha; intensities in gray levels
  int iterations = 100;
  bool prefilter = false;          // Gaussian presmoothing, sigma = 1 px
};

struct HsResult {
  FlowField flow;
  std::vector<double> residuals;  // RMS change of (u, v) per iteration
};

namespace detail {

inline Image presmooth(const Image& img) {
  Volume<double> v(img.width(), img.height(), 1);
  v.set_slice(0, img);
  const GaussianWindow w = gaussian_window(3, 3, 0);
  return local_mean(v, w).slice_grid(0);
}

}  // namespace detail

/// Single-scale Horn-Schunck. Derivatives use the 2x2x2 cube averages of
/// the original method and the flow Laplacian uses the 1/6 (edge) and 1/12
/// (corner) neighbour weights; every iteration is a Jacobi update from the
/// previous iterate. Borders replicate the nearest pixel.
inline HsResult horn_schunck_with_log(const Image& frame_a, const Image& frame_b, const HsParams& p = {}) {
  if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height())
    throw Error("horn_schunck: frame dimensions differ");
  if (p.iterations < 1) throw Error("horn_schunck: iterations must be >= 1");
  if (!(p.smoothness_weight > 0)) throw Error("horn_schunck: smoothness weight must be positive");
  const Image a = p.prefilter ? detail::presmooth(frame_a) : frame_a;
  const Image b = p.prefilter ? detail::presmooth(frame_b) : frame_b;
  const int w = a.width(), h = a.height();
  auto cx = [w](int x) { return std::clamp(x, 0, w - 1); };
  auto cy = [h](int y) { return std::clamp(y, 0, h - 1); };

  Image ex(w, h), ey(w, h), et(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x1 = cx(x + 1), y1 = cy(y + 1);
      ex(x, y) = 0.25 * (a(x1, y) - a(x, y) + a(x1, y1) - a(x, y1) + b(x1, y) - b(x, y) + b(x1, y1) - b(x, y1));
      ey(x, y) = 0.25 * (a(x, y1) - a(x, y) + a(x1, y1) - a(x1, y) + b(x, y1) - b(x, y) + b(x1, y1) - b(x1, y));
      et(x, y) = 0.25 * (b(x, y) - a(x, y) + b(x1, y) - a(x1, y) + b(x, y1) - a(x, y1) + b(x1, y1) - a(x1, y1));
    }
  }

  const double alpha2 = p.smoothness_weight * p.smoothness_weight;
  Image u(w, h, 0.0), v(w, h, 0.0), un(w, h), vn(w, h);
  auto neighbour_mean = [&](const Image& f, int x, int y) {
    const int xm = cx(x - 1), xp = cx(x + 1), ym = cy(y - 1), yp = cy(y + 1);
    return (f(xm, y) + f(xp, y) + f(x, ym) + f(x, yp)) / 6.0 +
           (f(xm, ym) + f(xp, ym) + f(xm, yp) + f(xp, yp)) / 12.0;
  };
  HsResult res{FlowField(w, h), {}};
  for (int it = 0; it < p.iterations; ++it) {
    double change = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double ub = neighbour_mean(u, x, y), vb = neighbour_mean(v, x, y);
        const double gx = ex(x, y), gy = ey(x, y);
        const double k = (gx * ub + gy * vb + et(x, y)) / (alpha2 + gx * gx + gy * gy);
        un(x, y) = ub - gx * k;
        vn(x, y) = vb - gy * k;
        change += (un(x, y) - u(x, y)) * (un(x, y) - u(x, y)) + (vn(x, y) - v(x, y)) * (vn(x, y) - v(x, y));
      }
    }
    std::swap(u, un);
    std::swap(v, vn);
    res.residuals.push_back(std::sqrt(change / (static_cast<double>(w) * h)));
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) res.flow.set(x, y, u(x, y), v(x, y));
  return res;
}

inline FlowField horn_schunck(const Image& frame_a, const Image& frame_b, const HsParams& p = {}) {
  return horn_schunck_with_log(frame_a, frame_b, p).flow;
}

}  // namespace stflow
