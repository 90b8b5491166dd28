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
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stflow {

/// Domain or data error (bad input file, degenerate statistics, invariant
/// violation). The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major 2-D grid. x indexes columns (width), y indexes rows.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(checked_size(width, height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  const T& operator()(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  static std::size_t checked_size(int w, int h) {
    if (w < 0 || h < 0) throw Error("grid dimensions must be nonnegative");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Dense 3-D grid stored as consecutive row-major slices.
template <typename T>
class Volume {
 public:
  Volume() = default;
  Volume(int width, int height, int depth, T fill = T{})
      : width_(width), height_(height), depth_(depth),
        data_(checked_size(width, height, depth), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y, int k) noexcept { return data_[index(x, y, k)]; }
  const T& operator()(int x, int y, int k) const noexcept {
    return data_[index(x, y, k)];
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  std::span<T> slice(int k) noexcept {
    return std::span<T>(data_).subspan(index(0, 0, k), plane());
  }
  std::span<const T> slice(int k) const noexcept {
    return std::span<const T>(data_).subspan(index(0, 0, k), plane());
  }

  void set_slice(int k, const Grid<T>& g) {
    if (g.width() != width_ || g.height() != height_)
      throw Error("slice dimensions do not match volume");
    auto dst = slice(k);
    auto src = g.values();
    std::copy(src.begin(), src.end(), dst.begin());
  }

  Grid<T> slice_grid(int k) const {
    Grid<T> g(width_, height_);
    auto src = slice(k);
    std::copy(src.begin(), src.end(), g.values().begin());
    return g;
  }

  bool operator==(const Volume&) const = default;

 private:
  std::size_t plane() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::size_t index(int x, int y, int k) const noexcept {
    return (static_cast<std::size_t>(k) * height_ + y) * width_ + x;
  }
  static std::size_t checked_size(int w, int h, int d) {
    if (w < 0 || h < 0 || d < 0)
      throw Error("volume dimensions must be nonnegative");
    return static_cast<std::size_t>(w) * h * d;
  }

  int width_ = 0;
  int height_ = 0;
  int depth_ = 0;
  std::vector<T> data_;
};

using Image = Grid<double>;

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const Rect&) const = default;
};

inline bool inside(const Rect& r, int width, int height) noexcept {
  return r.x >= 0 && r.y >= 0 && r.width > 0 && r.height > 0 &&
         r.x + r.width <= width && r.y + r.height <= height;
}

}  // namespace stflow
