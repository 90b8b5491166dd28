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
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "stflow/grid.hpp"

namespace stflow {

namespace binning {
inline constexpr int kBins = 101;
inline constexpr double kLo = -5.0;
inline constexpr double kHi = 5.0;
}  // namespace binning

/// Equal-width bins over [lo, hi] with normalized mass.
struct Histogram {
  int bins = 0;
  double lo = 0;
  double hi = 0;
  std::vector<double> mass;

  double width() const noexcept { return (hi - lo) / bins; }
  double edge(int i) const noexcept { return lo + (hi - lo) * i / bins; }
  double center(int i) const noexcept { return lo + (hi - lo) * (i + 0.5) / bins; }

  bool same_binning(const Histogram& o) const noexcept {
    return bins == o.bins && lo == o.lo && hi == o.hi;
  }
};

struct Binning {
  int bins = binning::kBins;
  double lo = binning::kLo;
  double hi = binning::kHi;
};

namespace detail {

inline void check_binning(const Binning& b) {
  if (b.bins < 1) throw Error("histogram: bin count must be positive");
  if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi))
    throw Error("histogram: degenerate range");
}

inline int bin_index(double x, const Binning& b) noexcept {
  const double f = (x - b.lo) / (b.hi - b.lo) * b.bins;
  if (!(f >= 0)) return 0;  // also catches -inf
  if (f >= b.bins) return b.bins - 1;
  return static_cast<int>(f);
}

}  // namespace detail

/// Normalized histogram; samples outside [lo, hi] land in the end bins.
inline Histogram histogram(std::span<const double> samples, const Binning& b = {}) {
  detail::check_binning(b);
  if (samples.empty()) throw Error("histogram: empty sample set");
  std::vector<std::size_t> counts(static_cast<std::size_t>(b.bins), 0);
  for (double x : samples) {
    if (std::isnan(x)) throw Error("histogram: NaN sample");
    ++counts[static_cast<std::size_t>(detail::bin_index(x, b))];
  }
  Histogram h{b.bins, b.lo, b.hi, std::vector<double>(counts.size())};
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < counts.size(); ++i) h.mass[i] = static_cast<double>(counts[i]) / n;
  return h;
}

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// N(0, 1) probability mass per bin; the end bins absorb the tails.
inline Histogram gaussian_reference(const Binning& b = {}) {
  detail::check_binning(b);
  if (b.bins < 3) throw Error("gaussian_reference: need at least 3 bins");
  Histogram h{b.bins, b.lo, b.hi, std::vector<double>(static_cast<std::size_t>(b.bins))};
  // Mass from CDF differences at interior edges; evaluating the upper half
  // through the mirrored edge keeps the result exactly symmetric.
  std::vector<double> cdf(static_cast<std::size_t>(b.bins) + 1);
  cdf.front() = 0.0;
  cdf.back() = 1.0;
  for (int i = 1; i < b.bins; ++i) cdf[i] = normal_cdf(h.edge(i));
  for (int i = 0; i < b.bins; ++i) h.mass[i] = cdf[i + 1] - cdf[i];
  if (b.lo == -b.hi) {
    for (int i = 0; i < b.bins / 2; ++i) h.mass[b.bins - 1 - i] = h.mass[i];
  }
  double sum = 0;
  for (double m : h.mass) sum += m;
  for (double& m : h.mass) m /= sum;
  return h;
}

inline constexpr double kKldFloor = 1e-10;

/// D(P || Q) = sum P ln(P / Q) with Q floored at 1e-10; empty P bins add 0.
inline double kld(const Histogram& p, const Histogram& q) {
  if (!p.same_binning(q) || p.mass.size() != q.mass.size())
    throw Error("kld: histograms use different binning");
  double d = 0;
  for (std::size_t i = 0; i < p.mass.size(); ++i) {
    if (p.mass[i] <= 0) continue;
    d += p.mass[i] * std::log(p.mass[i] / std::max(q.mass[i], kKldFloor));
  }
  return std::max(d, 0.0);
}

/// Generalized Gaussian fit: shape alpha, variance s2, scale beta.
struct GgdFit {
  double alpha = 2.0;
  double variance = 1.0;
  double beta = std::sqrt(2.0);
};

/// beta = s * sqrt(Gamma(1/alpha) / Gamma(3/alpha)).
inline double ggd_beta(double alpha, double variance) {
  return std::sqrt(variance) * std::exp(0.5 * (std::lgamma(1.0 / alpha) - std::lgamma(3.0 / alpha)));
}

/// Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2, strictly decreasing in a.
inline double ggd_moment_ratio(double alpha) {
  return std::exp(std::lgamma(1.0 / alpha) + std::lgamma(3.0 / alpha) - 2.0 * std::lgamma(2.0 / alpha));
}

inline double ggd_density(double x, const GgdFit& f) {
  return f.alpha / (2.0 * f.beta * std::tgamma(1.0 / f.alpha)) *
         std::exp(-std::pow(std::fabs(x) / f.beta, f.alpha));
}

inline constexpr double kAlphaMin = 0.1;
inline constexpr double kAlphaMax = 10.0;

/// Moment-matching GGD fit: alpha solves E[x^2] / E[|x|]^2 = ratio(alpha)
/// by bisection on [0.1, 10]; s2 is the sample variance.
inline GgdFit ggd_fit(std::span<const double> samples) {
  if (samples.size() < 100) throw Error("ggd_fit: need at least 100 samples");
  double abs_mean = 0, sq_mean = 0, mean = 0;
  for (double x : samples) {
    if (!std::isfinite(x)) throw Error("ggd_fit: non-finite sample");
    abs_mean += std::fabs(x);
    sq_mean += x * x;
    mean += x;
  }
  const double n = static_cast<double>(samples.size());
  abs_mean /= n;
  sq_mean /= n;
  mean /= n;
  double var = 0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= n;
  if (!(var > 0) || !(abs_mean > 0)) throw Error("ggd_fit: degenerate (constant) samples");

  const double target = sq_mean / (abs_mean * abs_mean);
  double lo = kAlphaMin, hi = kAlphaMax;
  if (target > ggd_moment_ratio(lo) || target < ggd_moment_ratio(hi))
    throw Error("ggd_fit: shape root outside [0.1, 10]");
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ggd_moment_ratio(mid) > target) lo = mid;
    else hi = mid;
  }
  const double alpha = 0.5 * (lo + hi);
  return {alpha, var, ggd_beta(alpha, var)};
}

/// `bin_center,mass` rows with a header line.
inline std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_center,mass\n";
  char buf[96];
  for (int i = 0; i < h.bins; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", h.center(i), h.mass[i]);
    out += buf;
  }
  return out;
}

}  // namespace stflow
