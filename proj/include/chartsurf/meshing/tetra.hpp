// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/core/mesh.hpp"
#include "chartsurf/meshing/delaunay.hpp"
#include "chartsurf/meshing/opacity_field.hpp"

namespace chartsurf::meshing {

struct TetraGrid {
    std::vector<core::Vec3d> points;
    std::vector<std::array<int, 4>> tets;
    std::vector<uint8_t> labels;  // 1 = occupied
    double poisson_radius = 0.0;
};

/// Candidate points: Poisson-disk thinned surface samples plus each sample
/// offset by +-3 local radii along its normal (budget/3 surface samples);
/// Delaunay tetrahedralized and labeled by the opacity field. A coplanar
/// degenerate input is jittered once by 1e-6 x diameter and retried.
TetraGrid build_adaptive_tetra_grid(std::span<const core::Vec3d> sample_positions,
                                    std::span<const core::Vec3d> sample_normals,
                                    std::span<const double> sample_radii, int vertex_budget,
                                    const BinaryOpacityField& field, uint64_t seed = 1);

/// Marching tetrahedra over the label transitions; crossing points located
/// by 12 bisection steps on the field; triangles oriented toward the
/// label-0 side; degenerate triangles dropped.
core::TriangleMesh extract_tetra_mesh(const TetraGrid& grid, const BinaryOpacityField& field);

}  // namespace chartsurf::meshing
