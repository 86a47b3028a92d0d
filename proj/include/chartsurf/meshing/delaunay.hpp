// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <span>
#include <vector>

#include "chartsurf/core/vec.hpp"

namespace chartsurf::meshing {

/// Incremental 3D Delaunay triangulation (Bowyer-Watson with a walk-based
/// point location). Points are normalized internally; near-degenerate
/// inputs should be jittered by the caller (build_adaptive_tetra_grid does).
struct DelaunayResult {
    /// Tetrahedra as 4 point indices, positively oriented, super-tetra
    /// elements removed.
    std::vector<std::array<int, 4>> tets;
};

DelaunayResult delaunay3d(std::span<const core::Vec3d> points);

}  // namespace chartsurf::meshing
