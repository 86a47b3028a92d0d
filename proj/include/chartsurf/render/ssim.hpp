// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "chartsurf/core/vec.hpp"

namespace chartsurf::render {

/// Mean SSIM over pixels and channels. 11x11 Gaussian window with
/// sigma 1.5, K1 = 0.01, K2 = 0.03; border windows are renormalized over
/// their in-bounds support. When d_a is non-null it receives
/// d(mean ssim) / d(a).
double ssim(std::span<const core::Vec3d> a, std::span<const core::Vec3d> b, int width,
            int height, std::vector<core::Vec3d>* d_a = nullptr);

}  // namespace chartsurf::render
