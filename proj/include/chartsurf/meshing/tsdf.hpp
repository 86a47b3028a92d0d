// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "chartsurf/core/camera.hpp"
#include "chartsurf/core/image.hpp"
#include "chartsurf/core/mesh.hpp"

namespace chartsurf::meshing {

using core::Camera;
using core::Vec3d;

/// Projective truncated signed distance volume (dense).
struct TsdfVolume {
    Vec3d origin{};
    double voxel = 0.0;
    int nx = 0, ny = 0, nz = 0;
    double trunc = 0.0;
    std::vector<float> tsdf;    // clamped to [-trunc, trunc]
    std::vector<float> weight;  // >= 0

    size_t idx(int x, int y, int z) const {
        return (static_cast<size_t>(z) * ny + y) * nx + x;
    }
    Vec3d voxel_center(int x, int y, int z) const {
        return origin + Vec3d{(x + 0.5) * voxel, (y + 0.5) * voxel, (z + 0.5) * voxel};
    }
};

/// L levels; level l doubles the voxel size and scales the level-0 box by
/// 3^l about the scene centroid.
struct MultiResTsdf {
    std::vector<TsdfVolume> levels;
    Vec3d box_lo{}, box_hi{};  // level-0 box
    Vec3d centroid{};
};

/// Standard projective TSDF integration of the depth maps (sdf = rendered
/// depth - voxel camera depth, clamped at +-trunc * 2^l, unit-weight
/// averaged over observing views). Throws when no voxel receives data.
MultiResTsdf fuse_multires_tsdf(std::span<const core::DepthMap> depths,
                                std::span<const Camera> cameras, int levels, double v0,
                                double trunc);

/// Marching cubes per level; triangles of level l whose centroid falls in
/// the level-(l-1) box are dropped; duplicate vertices within v0/10 are
/// welded across the seams.
core::TriangleMesh extract_tsdf_mesh(const MultiResTsdf& mr);

/// Marching cubes over a single volume (only cells with all eight corners
/// observed produce triangles).
core::TriangleMesh marching_cubes(const TsdfVolume& vol);

}  // namespace chartsurf::meshing
