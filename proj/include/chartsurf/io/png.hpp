// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "chartsurf/core/image.hpp"

namespace chartsurf::io {

/// 8-bit RGB PNG. Values are clamped to [0,1] and quantized with round().
void write_png(const core::ColorImage& img, const std::filesystem::path& path);

/// Reads 8-bit RGB/RGBA/gray non-interlaced PNGs into [0,1] floats.
core::ColorImage read_png(const std::filesystem::path& path);

}  // namespace chartsurf::io
