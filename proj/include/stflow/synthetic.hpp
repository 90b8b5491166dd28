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
#include <random>
#include <vector>

#include "stflow/grid.hpp"
#include "stflow/video_io.hpp"

namespace stflow::synthetic {

/// Multi-octave value-noise texture with a roughly 1/f amplitude spectrum,
/// rescaled to mean 128 and the given standard deviation, clamped to
/// [0, 255]. Deterministic in (width, height, seed).
inline Image fractal_texture(int width, int height, std::uint64_t seed, double contrast = 40.0,
                             int finest_cell = 2, int octaves = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Image img(width, height, 0.0);
  int cell = finest_cell;
  for (int o = 0; o < octaves; ++o, cell *= 2) {
    const int gw = width / cell + 2, gh = height / cell + 2;
    std::vector<double> g(static_cast<std::size_t>(gw) * gh);
    for (auto& v : g) v = gauss(rng);
    const double amp = static_cast<double>(cell);
    for (int y = 0; y < height; ++y) {
      const double fy = static_cast<double>(y) / cell;
      const int y0 = static_cast<int>(fy);
      const double ty = fy - y0;
      const double sy = ty * ty * (3 - 2 * ty);
      for (int x = 0; x < width; ++x) {
        const double fx = static_cast<double>(x) / cell;
        const int x0 = static_cast<int>(fx);
        const double tx = fx - x0;
        const double sx = tx * tx * (3 - 2 * tx);
        auto at = [&](int i, int j) { return g[static_cast<std::size_t>(j) * gw + i]; };
        const double top = at(x0, y0) * (1 - sx) + at(x0 + 1, y0) * sx;
        const double bot = at(x0, y0 + 1) * (1 - sx) + at(x0 + 1, y0 + 1) * sx;
        img(x, y) += amp * (top * (1 - sy) + bot * sy);
      }
    }
  }
  double mean = 0, sq = 0;
  for (double v : img.values()) mean += v;
  mean /= static_cast<double>(img.size());
  for (double v : img.values()) sq += (v - mean) * (v - mean);
  const double scale = contrast / std::sqrt(sq / static_cast<double>(img.size()));
  for (double& v : img.values()) v = std::clamp(128.0 + (v - mean) * scale, 0.0, 255.0);
  return img;
}

/// Piecewise-constant texture of overlapping random discs on a random
/// background; edges are sharp and regions flat.
inline Image disc_texture(int width, int height, std::uint64_t seed, int discs = 0, double min_r = 3,
                          double max_r = 16) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0, width), uy(0, height), ur(min_r, max_r), ug(20, 235);
  if (discs <= 0) discs = width * height / 60;
  Image img(width, height, ug(rng));
  for (int n = 0; n < discs; ++n) {
    const double cx = ux(rng), cy = uy(rng), r = ur(rng), g = ug(rng);
    const int x0 = std::max(0, static_cast<int>(cx - r)), x1 = std::min(width - 1, static_cast<int>(cx + r));
    const int y0 = std::max(0, static_cast<int>(cy - r)), y1 = std::min(height - 1, static_cast<int>(cy + r));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img(x, y) = g;
  }
  return img;
}

/// Soft-thresholded smooth Gaussian field: 128 + amplitude * tanh(k * G),
/// where G is white noise blurred by a Gaussian of width `blur` and scaled
/// to unit variance. Produces blobs with soft edges whose width shrinks as
/// `steepness` grows. `detail` adds pixel-scale white Gaussian texture of
/// that standard deviation (it moves with the scene; it is not sensor noise).
inline Image blob_texture(int width, int height, std::uint64_t seed, double blur = 4.0,
                          double steepness = 2.0, double amplitude = 100.0, double detail = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int half = std::max(1, static_cast<int>(std::ceil(3 * blur)));
  std::vector<double> taps(2 * static_cast<std::size_t>(half) + 1);
  double sum = 0;
  for (int n = -half; n <= half; ++n) sum += taps[n + half] = std::exp(-0.5 * n * n / (blur * blur));
  for (double& t : taps) t /= sum;
  const int pw = width + 2 * half, ph = height + 2 * half;
  std::vector<double> noise(static_cast<std::size_t>(pw) * ph);
  for (double& v : noise) v = gauss(rng);
  std::vector<double> rows(static_cast<std::size_t>(width) * ph);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0;
      for (int n = -half; n <= half; ++n) acc += taps[n + half] * noise[static_cast<std::size_t>(y) * pw + x + half + n];
      rows[static_cast<std::size_t>(y) * width + x] = acc;
    }
  Image g(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double acc = 0;
      for (int n = -half; n <= half; ++n) acc += taps[n + half] * rows[static_cast<std::size_t>(y + half + n) * width + x];
      g(x, y) = acc;
    }
  double sq = 0;
  for (double v : g.values()) sq += v * v;
  const double inv = 1.0 / std::sqrt(sq / static_cast<double>(g.size()));
  for (double& v : g.values())
    v = std::clamp(128.0 + amplitude * std::tanh(steepness * v * inv) + detail * gauss(rng), 0.0, 255.0);
  return g;
}

struct TranslationSpec {
  int width = 128;
  int height = 128;
  int frames = 2;
  int dx = 0;  // pixels/frame
  int dy = 0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 1;
  bool quantize = true;
};

/// Frames cropped from a larger texture so that I_{t+1}(p + d) = I_t(p)
/// exactly before noise. The texture must cover the full sweep.
inline FrameSequence translating_sequence(const Image& texture, const TranslationSpec& s) {
  const int sweep_x = std::abs(s.dx) * (s.frames - 1), sweep_y = std::abs(s.dy) * (s.frames - 1);
  if (texture.width() < s.width + sweep_x || texture.height() < s.height + sweep_y)
    throw Error("texture too small for the requested translation");
  const int base_x = s.dx > 0 ? sweep_x : 0, base_y = s.dy > 0 ? sweep_y : 0;
  std::mt19937_64 rng(s.noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Image> frames;
  for (int t = 0; t < s.frames; ++t) {
    Image f(s.width, s.height);
    const int ox = base_x - t * s.dx, oy = base_y - t * s.dy;
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        double v = texture(ox + x, oy + y);
        if (s.noise_sigma > 0) v += s.noise_sigma * gauss(rng);
        if (s.quantize) v = std::round(v);
        f(x, y) = std::clamp(v, 0.0, 255.0);
      }
    }
    frames.push_back(std::move(f));
  }
  return FrameSequence(std::move(frames));
}

/// Ground-truth flow for a uniform translation.
inline FlowField constant_flow(int width, int height, double u, double v) {
  FlowField f(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) f.set(x, y, u, v);
  return f;
}

}  // namespace stflow::synthetic
