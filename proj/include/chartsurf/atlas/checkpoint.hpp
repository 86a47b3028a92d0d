// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "chartsurf/atlas/atlas.hpp"

namespace chartsurf::atlas {

/// Single binary checkpoint per stage. Little-endian layout:
///   magic "CSCP", u32 version, u32 chart count;
///   per chart: structural header (dims, mode, encoding dims, bins, depth
///   range, camera as f64), valid mask bytes, baked points as f32;
///   then every parameter group: name, u64 size, f32 payload.
void save_checkpoint(const AtlasState& atlas, const std::filesystem::path& path);
AtlasState load_checkpoint(const std::filesystem::path& path);

}  // namespace chartsurf::atlas
