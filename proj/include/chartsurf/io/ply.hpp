// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "chartsurf/core/mesh.hpp"

namespace chartsurf::io {

/// Binary little-endian PLY: positions float32, face indices int32,
/// optional float32 vertex normals.
void write_ply(const core::TriangleMesh& mesh, const std::filesystem::path& path);
core::TriangleMesh read_ply(const std::filesystem::path& path);

}  // namespace chartsurf::io
