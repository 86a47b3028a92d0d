// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "chartsurf/core/error.hpp"
#include "chartsurf/core/vec.hpp"

namespace chartsurf::core {

/// Row-major image grid. Payload types are 32-bit (float / Vec3f / int);
/// all downstream math promotes to double.
template <typename T>
class ImageGrid {
  public:
    ImageGrid() = default;
    ImageGrid(int width, int height, T fill = T{})
        : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {
        CHARTSURF_CHECK_MSG(width > 0 && height > 0, "ImageGrid dimensions");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

  private:
    int width_ = 0, height_ = 0;
    std::vector<T> data_;
};

using DepthMap = ImageGrid<float>;
using ColorImage = ImageGrid<Vec3f>;
using IdMap = ImageGrid<int>;

/// Clamped bilinear sample of a scalar grid at continuous grid coordinates
/// (gx, gy) where texel (i, j) sits at coordinate (i, j).
inline double bilinear_scalar(const ImageGrid<float>& g, double gx, double gy) {
    const auto clampi = [](int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); };
    if (gx < 0) gx = 0;
    if (gy < 0) gy = 0;
    if (gx > g.width() - 1) gx = g.width() - 1;
    if (gy > g.height() - 1) gy = g.height() - 1;
    const int x0 = clampi(static_cast<int>(gx), 0, g.width() - 1);
    const int y0 = clampi(static_cast<int>(gy), 0, g.height() - 1);
    const int x1 = clampi(x0 + 1, 0, g.width() - 1);
    const int y1 = clampi(y0 + 1, 0, g.height() - 1);
    const double fx = gx - x0, fy = gy - y0;
    return (1 - fy) * ((1 - fx) * g.at(x0, y0) + fx * g.at(x1, y0)) +
           fy * ((1 - fx) * g.at(x0, y1) + fx * g.at(x1, y1));
}

}  // namespace chartsurf::core
