// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "chartsurf/core/image.hpp"

namespace chartsurf::io {

/// Grayscale PFM ("Pf"), 32-bit float. Rows are stored bottom-to-top; a
/// negative scale header means little-endian, which is what we write.
void write_pfm(const core::DepthMap& depth, const std::filesystem::path& path);
core::DepthMap read_pfm(const std::filesystem::path& path);

}  // namespace chartsurf::io
