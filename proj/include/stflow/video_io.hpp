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

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "stflow/grid.hpp"

namespace stflow {

/// Ordered luminance frames sharing one size. Values are gray levels in
/// [0, 255] held as doubles.
class FrameSequence {
 public:
  FrameSequence() = default;
  explicit FrameSequence(std::vector<Image> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) throw Error("frame sequence must hold at least one frame");
    for (const auto& f : frames_) {
      if (f.width() != width() || f.height() != height())
        throw Error("frame dimensions differ within sequence");
      for (double v : f.values())
        if (!(v >= 0.0 && v <= 255.0))
          throw Error("luminance outside [0, 255]");
    }
  }

  int width() const noexcept { return frames_.empty() ? 0 : frames_.front().width(); }
  int height() const noexcept { return frames_.empty() ? 0 : frames_.front().height(); }
  int count() const noexcept { return static_cast<int>(frames_.size()); }

  const Image& operator[](int t) const { return frames_.at(static_cast<std::size_t>(t)); }
  const std::vector<Image>& frames() const noexcept { return frames_; }

 private:
  std::vector<Image> frames_;
};

/// Per-pixel displacement in pixels/frame. u is horizontal, v vertical.
struct FlowField {
  Grid<float> u;
  Grid<float> v;
  Grid<std::uint8_t> valid;

  FlowField() = default;
  FlowField(int width, int height)
      : u(width, height, 0.f), v(width, height, 0.f), valid(width, height, 1) {}

  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }
  bool is_valid(int x, int y) const noexcept { return valid(x, y) != 0; }

  void set(int x, int y, double du, double dv) {
    u(x, y) = static_cast<float>(du);
    v(x, y) = static_cast<float>(dv);
    valid(x, y) = 1;
  }
  void invalidate(int x, int y) noexcept { valid(x, y) = 0; }

  std::size_t valid_count() const noexcept {
    std::size_t n = 0;
    for (auto m : valid.values()) n += m != 0;
    return n;
  }
};

namespace flo {

inline constexpr float kMagic = 202021.25f;
inline constexpr float kUnknown = 1e10f;
inline constexpr float kUnknownThreshold = 1e9f;

inline bool is_sentinel(float c) noexcept {
  return !std::isfinite(c) || std::fabs(c) >= kUnknownThreshold;
}

}  // namespace flo

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
T load_le(const unsigned char* p) noexcept {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                       (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<T>(bits);
}

template <typename T>
void store_le(std::vector<unsigned char>& out, T value) {
  static_assert(sizeof(T) == 4);
  auto bits = std::bit_cast<std::uint32_t>(value);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
}

inline bool is_png(const std::vector<unsigned char>& bytes) {
  static constexpr std::array<unsigned char, 8> sig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= sig.size() && std::equal(sig.begin(), sig.end(), bytes.begin());
}

inline Image decode_pgm(const std::vector<unsigned char>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
      if (v > (1L << 24)) throw Error(name + ": PGM header value too large");
    }
    if (!any) throw Error(name + ": malformed PGM header");
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P') throw Error(name + ": not a PGM/PNG file");
  if (bytes[1] != '5') {
    throw Error(name + ": unsupported image type P" + std::string(1, static_cast<char>(bytes[1])) +
                " (only binary gray P5 is accepted)");
  }
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (w <= 0 || h <= 0) throw Error(name + ": empty image");
  if (maxval <= 0 || maxval > 255)
    throw Error(name + ": unsupported pixel depth (maxval " + std::to_string(maxval) + ")");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw Error(name + ": malformed PGM header");
  ++pos;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() - pos < n) throw Error(name + ": truncated PGM payload");
  Image img(static_cast<int>(w), static_cast<int>(h));
  auto vals = img.values();
  for (std::size_t i = 0; i < n; ++i) vals[i] = bytes[pos + i];
  return img;
}

inline Image decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(name + ": " + image.message);
  std::unique_ptr<png_image, void (*)(png_image*)> guard(&image, png_image_free);
  if (image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA | PNG_FORMAT_FLAG_COLORMAP))
    throw Error(name + ": color or alpha PNG rejected (luminance only)");
  if (image.format & PNG_FORMAT_FLAG_LINEAR)
    throw Error(name + ": unsupported pixel depth (16-bit PNG)");
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr))
    throw Error(name + ": " + image.message);
  Image img(static_cast<int>(image.width), static_cast<int>(image.height));
  std::copy(buffer.begin(), buffer.end(), img.values().begin());
  return img;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace detail

/// Load one 8-bit luminance image (binary PGM or gray PNG).
inline Image load_image(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return detail::is_png(bytes) ? detail::decode_png(bytes, path.string())
                               : detail::decode_pgm(bytes, path.string());
}

/// Write an 8-bit binary PGM; values are rounded and clamped to [0, 255].
inline void write_pgm(const Image& img, const std::filesystem::path& path) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.size());
  for (double v : img.values())
    bytes.push_back(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L)));
  detail::write_bytes(path, bytes);
}

/// Write a 16-bit big-endian binary PGM (maxval 65535).
inline void write_pgm16(const Grid<std::uint16_t>& img, const std::filesystem::path& path) {
  const std::string header = "P5\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n65535\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  for (auto v : img.values()) {
    bytes.push_back(static_cast<unsigned char>(v >> 8));
    bytes.push_back(static_cast<unsigned char>(v & 0xff));
  }
  detail::write_bytes(path, bytes);
}

/// Expand a printf-style frame pattern ("f_%03d.pgm") for one index.
inline std::string format_frame_path(const std::string& pattern, int index) {
  int conversions = 0;
  for (std::size_t i = 0; i + 1 < pattern.size(); ++i) {
    if (pattern[i] != '%') continue;
    if (pattern[i + 1] == '%') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < pattern.size() && (std::isdigit(pattern[j]) || pattern[j] == '0')) ++j;
    if (j >= pattern.size() || pattern[j] != 'd')
      throw Error("frame pattern must use a single %d conversion: " + pattern);
    ++conversions;
    i = j;
  }
  if (conversions != 1) throw Error("frame pattern must contain exactly one %d: " + pattern);
  const int n = std::snprintf(nullptr, 0, pattern.c_str(), index);
  std::string out(static_cast<std::size_t>(n), '\0');
  std::snprintf(out.data(), out.size() + 1, pattern.c_str(), index);
  return out;
}

/// Load frames first..last (inclusive) in index order.
inline FrameSequence load_frame_sequence(const std::string& path_pattern, int first, int last) {
  if (last < first) throw Error("empty frame range");
  std::vector<Image> frames;
  for (int t = first; t <= last; ++t) {
    const std::string path = format_frame_path(path_pattern, t);
    if (!std::filesystem::exists(path)) throw Error("missing frame file: " + path);
    Image img = load_image(path);
    if (!frames.empty() &&
        (img.width() != frames.front().width() || img.height() != frames.front().height())) {
      throw Error("dimension mismatch in " + path + ": " + std::to_string(img.width()) + "x" +
                  std::to_string(img.height()) + " vs " + std::to_string(frames.front().width()) +
                  "x" + std::to_string(frames.front().height()));
    }
    frames.push_back(std::move(img));
  }
  return FrameSequence(std::move(frames));
}

/// Decode a Middlebury .flo byte buffer. Components at or beyond 1e9 in
/// magnitude (or non-finite) mark the pixel invalid; their stored values are
/// kept so encoding reproduces the input bytes.
inline FlowField decode_flo(const std::vector<unsigned char>& bytes, const std::string& name = "flo") {
  if (bytes.size() < 12) throw Error(name + ": truncated .flo header");
  if (std::bit_cast<std::uint32_t>(detail::load_le<float>(bytes.data())) !=
      std::bit_cast<std::uint32_t>(flo::kMagic))
    throw Error(name + ": bad .flo magic");
  const auto w = detail::load_le<std::int32_t>(bytes.data() + 4);
  const auto h = detail::load_le<std::int32_t>(bytes.data() + 8);
  if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20))
    throw Error(name + ": implausible .flo dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - 12 < n * 8) throw Error(name + ": truncated .flo payload");
  FlowField f(w, h);
  const unsigned char* p = bytes.data() + 12;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, p += 8) {
      const float u = detail::load_le<float>(p);
      const float v = detail::load_le<float>(p + 4);
      f.u(x, y) = u;
      f.v(x, y) = v;
      f.valid(x, y) = !(flo::is_sentinel(u) || flo::is_sentinel(v));
    }
  }
  return f;
}

inline std::vector<unsigned char> encode_flo(const FlowField& field) {
  const int w = field.width();
  const int h = field.height();
  if (w <= 0 || h <= 0) throw Error("flow field dimensions must be positive");
  if (field.v.width() != w || field.v.height() != h || field.valid.width() != w ||
      field.valid.height() != h)
    throw Error("flow field component dimensions differ");
  std::vector<unsigned char> out;
  out.reserve(12 + static_cast<std::size_t>(w) * h * 8);
  detail::store_le(out, flo::kMagic);
  detail::store_le(out, static_cast<std::int32_t>(w));
  detail::store_le(out, static_cast<std::int32_t>(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float u = field.u(x, y);
      float v = field.v(x, y);
      if (!field.is_valid(x, y) && !flo::is_sentinel(u) && !flo::is_sentinel(v)) {
        u = flo::kUnknown;
        v = flo::kUnknown;
      }
      detail::store_le(out, u);
      detail::store_le(out, v);
    }
  }
  return out;
}

inline FlowField read_flo(const std::filesystem::path& path) {
  return decode_flo(detail::read_file(path), path.string());
}

inline void write_flo(const FlowField& field, const std::filesystem::path& path) {
  detail::write_bytes(path, encode_flo(field));
}

}  // namespace stflow
