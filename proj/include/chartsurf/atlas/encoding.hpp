// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>

namespace chartsurf::atlas {

/// Bilinear taps and weights into a grid whose nodes span [0,1]^2 (node j
/// along x sits at u = j/(gw-1)). Out-of-range coordinates clamp.
struct BilinearTap {
    int i00 = 0, i10 = 0, i01 = 0, i11 = 0;  // node indices (row-major)
    double w00 = 1, w10 = 0, w01 = 0, w11 = 0;
};

inline BilinearTap grid_tap(int gw, int gh, double ux, double uy) {
    ux = std::clamp(ux, 0.0, 1.0) * (gw - 1);
    uy = std::clamp(uy, 0.0, 1.0) * (gh - 1);
    int x0 = std::min(static_cast<int>(ux), gw - 2);
    int y0 = std::min(static_cast<int>(uy), gh - 2);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    const double fx = std::clamp(ux - x0, 0.0, 1.0);
    const double fy = std::clamp(uy - y0, 0.0, 1.0);
    BilinearTap t;
    t.i00 = y0 * gw + x0;
    t.i10 = y0 * gw + x0 + 1;
    t.i01 = (y0 + 1) * gw + x0;
    t.i11 = (y0 + 1) * gw + x0 + 1;
    t.w00 = (1 - fx) * (1 - fy);
    t.w10 = fx * (1 - fy);
    t.w01 = (1 - fx) * fy;
    t.w11 = fx * fy;
    return t;
}

/// Linear interpolation between two depth bins; bin j sits at normalized
/// depth j/(B-1) over [d_min, d_max]. Clamps outside the range.
struct DepthTap {
    int b0 = 0, b1 = 0;
    double w0 = 1, w1 = 0;
};

inline DepthTap depth_tap(int bins, double d_min, double d_max, double depth) {
    const double span = d_max - d_min;
    double t = span > 0.0 ? (depth - d_min) / span : 0.0;
    t = std::clamp(t, 0.0, 1.0) * (bins - 1);
    int b0 = std::min(static_cast<int>(t), bins - 2);
    b0 = std::max(b0, 0);
    const double f = std::clamp(t - b0, 0.0, 1.0);
    return DepthTap{b0, b0 + 1, 1 - f, f};
}

}  // namespace chartsurf::atlas
