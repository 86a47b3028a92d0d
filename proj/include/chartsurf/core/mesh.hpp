// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "chartsurf/core/vec.hpp"

namespace chartsurf::core {

struct PointSet {
    std::vector<Vec3d> positions;
    std::vector<double> attributes;  // optional, per point when non-empty
};

struct TriangleMesh {
    std::vector<Vec3d> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<Vec3d> vertex_normals;  // optional

    /// Throws Error when a face index is out of range or repeated.
    void validate() const;

    double surface_area() const;
    Vec3d centroid_of_face(size_t f) const;

    /// Axis-aligned bounds; returns false for an empty mesh.
    bool bounds(Vec3d& lo, Vec3d& hi) const;
};

/// Diagonal of the bounding box of a set of points.
double bounding_diameter(const std::vector<Vec3d>& pts);

}  // namespace chartsurf::core
