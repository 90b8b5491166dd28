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

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stflow/grid.hpp"

namespace stflow {

/// Which axes the divisive-normalization contrast pools over.
enum class NormKind { TDN, SDN, STDN, MSCN2D };

inline std::string_view to_string(NormKind k) noexcept {
  switch (k) {
    case NormKind::TDN: return "TDN";
    case NormKind::SDN: return "SDN";
    case NormKind::STDN: return "STDN";
    case NormKind::MSCN2D: return "MSCN2D";
  }
  return "?";
}

inline NormKind parse_norm_kind(std::string_view s) {
  if (s == "TDN" || s == "tdn") return NormKind::TDN;
  if (s == "SDN" || s == "sdn") return NormKind::SDN;
  if (s == "STDN" || s == "stdn") return NormKind::STDN;
  if (s == "MSCN2D" || s == "mscn") return NormKind::MSCN2D;
  throw Error("unknown normalization kind: " + std::string(s));
}

namespace presets {
inline constexpr int kSpatialHalfWidth = 5;          // L = M = 5
inline constexpr int kTemporalHalfWidthAnalysis = 10;  // trajectory statistics
inline constexpr int kTemporalHalfWidthSearch = 5;   // four-step search
inline constexpr double kDivisiveC = 0.5;
inline constexpr double kMscnC = 1.0;
}  // namespace presets

enum Axis : int { kAxisX = 0, kAxisY = 1, kAxisT = 2 };

/// Separable Gaussian window over up to three axes (x, y, t). An axis with
/// half-width 0 is not pooled and carries the single tap 1.
class GaussianWindow {
 public:
  GaussianWindow() : half_widths_{0, 0, 0}, taps_{{{1.0}, {1.0}, {1.0}}} {}

  /// Window built from explicit per-axis factors (odd lengths, each
  /// normalized to unit sum on entry).
  static GaussianWindow from_taps(std::vector<double> x, std::vector<double> y,
                                  std::vector<double> t) {
    GaussianWindow w;
    std::array<std::vector<double>*, 3> axes = {&x, &y, &t};
    for (int a = 0; a < 3; ++a) {
      auto& v = *axes[a];
      if (v.empty()) v = {1.0};
      if (v.size() % 2 == 0) throw Error("window taps must have odd length");
      double sum = 0;
      for (double c : v) {
        if (!(c >= 0) || !std::isfinite(c)) throw Error("window taps must be finite and nonnegative");
        sum += c;
      }
      if (!(sum > 0)) throw Error("window taps must not all be zero");
      for (double& c : v) c /= sum;
      w.half_widths_[a] = static_cast<int>(v.size() / 2);
      w.taps_[a] = std::move(v);
    }
    return w;
  }

  int half_width(int axis) const noexcept { return half_widths_[axis]; }
  const std::array<int, 3>& half_widths() const noexcept { return half_widths_; }
  std::span<const double> taps(int axis) const noexcept { return taps_[axis]; }

  bool pools(int axis) const noexcept { return half_widths_[axis] > 0; }

  /// Weight at offset (l, m, n); offsets outside the support are zero.
  double tap(int l, int m, int n) const noexcept {
    const std::array<int, 3> o = {l, m, n};
    double w = 1.0;
    for (int a = 0; a < 3; ++a) {
      if (o[a] < -half_widths_[a] || o[a] > half_widths_[a]) return 0.0;
      w *= taps_[a][o[a] + half_widths_[a]];
    }
    return w;
  }

  /// Dense (2L+1) x (2M+1) x (2N+1) weight grid.
  Volume<double> dense() const {
    Volume<double> out(2 * half_widths_[0] + 1, 2 * half_widths_[1] + 1, 2 * half_widths_[2] + 1);
    for (int n = -half_widths_[2]; n <= half_widths_[2]; ++n)
      for (int m = -half_widths_[1]; m <= half_widths_[1]; ++m)
        for (int l = -half_widths_[0]; l <= half_widths_[0]; ++l)
          out(l + half_widths_[0], m + half_widths_[1], n + half_widths_[2]) = tap(l, m, n);
    return out;
  }

 private:
  std::array<int, 3> half_widths_;
  std::array<std::vector<double>, 3> taps_;
};

/// Sampled Gaussian taps out to +-half_width with sigma = half_width / 3,
/// normalized to unit sum. Mirror-symmetric by construction.
inline std::vector<double> gaussian_taps(int half_width) {
  if (half_width < 1) throw Error("window half-width must be >= 1");
  const double sigma = half_width / 3.0;
  std::vector<double> taps(2 * static_cast<std::size_t>(half_width) + 1);
  double sum = 0;
  for (int n = 0; n <= half_width; ++n) {
    const double w = std::exp(-0.5 * (n / sigma) * (n / sigma));
    taps[half_width + n] = w;
    sum += n == 0 ? w : 2 * w;
  }
  for (int n = 0; n <= half_width; ++n) {
    taps[half_width + n] /= sum;
    taps[half_width - n] = taps[half_width + n];
  }
  return taps;
}

/// Window with the given (x, y, t) half-widths; 0 leaves an axis unpooled.
inline GaussianWindow gaussian_window(int half_x, int half_y, int half_t) {
  if (half_x < 0 || half_y < 0 || half_t < 0) throw Error("window half-width must be >= 1");
  if (half_x == 0 && half_y == 0 && half_t == 0) throw Error("window must pool at least one axis");
  auto axis = [](int h) { return h == 0 ? std::vector<double>{1.0} : gaussian_taps(h); };
  return GaussianWindow::from_taps(axis(half_x), axis(half_y), axis(half_t));
}

inline GaussianWindow temporal_window(int n = presets::kTemporalHalfWidthAnalysis) {
  return gaussian_window(0, 0, n);
}
inline GaussianWindow spatial_window(int l = presets::kSpatialHalfWidth, int m = presets::kSpatialHalfWidth) {
  if (l < 1 || m < 1) throw Error("window half-width must be >= 1");
  return gaussian_window(l, m, 0);
}
inline GaussianWindow space_time_window(int l = presets::kSpatialHalfWidth,
                                        int m = presets::kSpatialHalfWidth,
                                        int n = presets::kTemporalHalfWidthAnalysis) {
  if (l < 1 || m < 1 || n < 1) throw Error("window half-width must be >= 1");
  return gaussian_window(l, m, n);
}

/// Default window for a normalization kind at the given temporal half-width.
inline GaussianWindow window_for(NormKind kind, int temporal_half_width) {
  switch (kind) {
    case NormKind::TDN: return temporal_window(temporal_half_width);
    case NormKind::SDN:
    case NormKind::MSCN2D: return spatial_window();
    case NormKind::STDN:
      return space_time_window(presets::kSpatialHalfWidth, presets::kSpatialHalfWidth,
                               temporal_half_width);
  }
  throw Error("unknown normalization kind");
}

struct NormalizedVolume {
  Volume<double> coeffs;
  NormKind kind = NormKind::STDN;
  double c = presets::kDivisiveC;
};

namespace detail {

/// Half-sample symmetric reflection of i into [0, n): -1 -> 0, n -> n - 1.
inline int mirror_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Correlate a volume with 1-D taps along one axis, mirror-extended.
inline Volume<double> filter_axis(const Volume<double>& in, int axis, std::span<const double> taps) {
  const int half = static_cast<int>(taps.size() / 2);
  if (half == 0) return in;
  const int w = in.width(), h = in.height(), d = in.depth();
  Volume<double> out(w, h, d);
  const int len = axis == kAxisX ? w : axis == kAxisY ? h : d;
  std::vector<int> idx(static_cast<std::size_t>(len) + 2 * half);
  for (int i = -half; i < len + half; ++i) idx[i + half] = mirror_index(i, len);

  for (int k = 0; k < d; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int pos = axis == kAxisX ? x : axis == kAxisY ? y : k;
        double acc = 0;
        for (int o = -half; o <= half; ++o) {
          const int s = idx[pos + o + half];
          const double v = axis == kAxisX ? in(s, y, k) : axis == kAxisY ? in(x, s, k) : in(x, y, s);
          acc += taps[o + half] * v;
        }
        out(x, y, k) = acc;
      }
    }
  }
  return out;
}

inline Volume<double> local_mean(const Volume<double>& in, const GaussianWindow& win) {
  Volume<double> out = filter_axis(in, kAxisX, win.taps(kAxisX));
  out = filter_axis(out, kAxisY, win.taps(kAxisY));
  return filter_axis(out, kAxisT, win.taps(kAxisT));
}

struct LocalMoments {
  Volume<double> mean;
  Volume<double> sigma;
};

/// Gaussian-weighted local mean and RMS deviation about that mean. Uses
/// sum w (I - mu)^2 = sum w I^2 - mu^2, which holds because taps sum to 1;
/// variances at rounding level relative to the second moment are set to 0.
inline LocalMoments local_moments(const Volume<double>& in, const GaussianWindow& win) {
  Volume<double> sq(in.width(), in.height(), in.depth());
  auto src = in.values();
  auto dst = sq.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * src[i];
  LocalMoments m{local_mean(in, win), local_mean(sq, win)};
  auto mu = m.mean.values();
  auto s = m.sigma.values();
  constexpr double kRelFloor = 64 * std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double second = s[i];
    const double var = second - mu[i] * mu[i];
    s[i] = var <= kRelFloor * second ? 0.0 : std::sqrt(var);
  }
  return m;
}

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw Error(std::string(what) + ": non-finite input value");
}

}  // namespace detail

/// Mean-subtracted, contrast-normalized coefficients of a single image:
/// (I - mu) / (sigma + c), with mu and sigma Gaussian-weighted over a 2-D
/// window. Edges use mirror extension.
inline NormalizedVolume mscn(const Image& image, double c = presets::kMscnC,
                             const GaussianWindow& window = spatial_window()) {
  detail::require_finite(image.values(), "mscn");
  if (!(c > 0)) throw Error("mscn: saturation constant must be positive");
  if (window.pools(kAxisT) || !window.pools(kAxisX) || !window.pools(kAxisY))
    throw Error("mscn: window must be spatial (2-D)");
  Volume<double> vol(image.width(), image.height(), 1);
  vol.set_slice(0, image);
  auto mom = detail::local_moments(vol, window);
  auto out = vol.values();
  auto mu = mom.mean.values();
  auto sd = mom.sigma.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - mu[i]) / (sd[i] + c);
  return {std::move(vol), NormKind::MSCN2D, c};
}

/// Divisive normalization of a frame-difference volume. The numerator is
/// the raw difference; the denominator is the local Gaussian-weighted RMS
/// contrast (about the local weighted mean) pooled along the kind's axes.
inline NormalizedVolume divisive_normalize(const Volume<double>& volume, NormKind kind,
                                           const GaussianWindow& window,
                                           double c = presets::kDivisiveC) {
  detail::require_finite(volume.values(), "divisive_normalize");
  if (!(c > 0)) throw Error("divisive_normalize: saturation constant must be positive");
  const bool sx = window.pools(kAxisX), sy = window.pools(kAxisY), st = window.pools(kAxisT);
  bool ok = false;
  switch (kind) {
    case NormKind::TDN: ok = !sx && !sy && st; break;
    case NormKind::SDN: ok = sx && sy && !st; break;
    case NormKind::STDN: ok = sx && sy && st; break;
    case NormKind::MSCN2D: ok = false; break;
  }
  if (!ok)
    throw Error("divisive_normalize: window axes do not match " + std::string(to_string(kind)));
  auto mom = detail::local_moments(volume, window);
  NormalizedVolume out{volume, kind, c};
  auto v = out.coeffs.values();
  auto sd = mom.sigma.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] /= sd[i] + c;
  return out;
}

/// Population variance (about the sample mean).
inline double sample_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size());
}

/// Rescale so the sample variance is 1. The mean is left in place.
inline void unit_variance_inplace(std::span<double> v) {
  const double var = sample_variance(v);
  if (!(var > 0)) throw Error("unit_variance: zero-variance input");
  const double inv = 1.0 / std::sqrt(var);
  for (double& x : v) x *= inv;
}

inline NormalizedVolume unit_variance(NormalizedVolume volume) {
  unit_variance_inplace(volume.coeffs.values());
  return volume;
}

}  // namespace stflow
