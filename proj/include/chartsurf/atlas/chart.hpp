// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "chartsurf/core/camera.hpp"
#include "chartsurf/core/image.hpp"

namespace chartsurf::atlas {

using core::Camera;
using core::Vec3d;

/// A per-view UV->3D surface patch initialized from a depth map. The pixel
/// grid samples UV space at pixel centers: pixel (x, y) <-> UV
/// ((x+0.5)/w, (y+0.5)/h). Geometry is kept in 64-bit.
struct Chart {
    int view = 0;
    int w = 0, h = 0;
    Camera camera;  // rescaled copy when the source depth was larger than max_side

    std::vector<Vec3d> initial_points;   // psi0, row-major
    std::vector<double> initial_depths;  // camera z of psi0
    std::vector<uint8_t> valid;          // depth > 0 mask
    std::vector<Vec3d> ray_dirs;         // unit world ray per pixel

    std::vector<Vec3d> ref_normals;      // N0 (oriented toward the camera)
    std::vector<double> ref_curvature;   // M0
    std::vector<uint8_t> ref_flags;      // degenerate-normal pixels

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * w + x; }
    bool is_valid(int x, int y) const { return valid[idx(x, y)] != 0; }
    core::Vec2d uv_of_pixel(int x, int y) const {
        return {(x + 0.5) / w, (y + 0.5) / h};
    }

    /// Recomputes ref_normals / ref_curvature / ray_dirs / initial_depths
    /// from initial_points.
    void refresh_reference_maps();
};

/// Backprojects a depth map into a chart. Sides larger than max_side are
/// resampled so that max(h, w) == max_side. Throws when no pixel is valid.
Chart init_chart(const core::DepthMap& depth, const Camera& camera, int view_index,
                 int max_side = 512);

struct AffineFit {
    double a = 1.0, b = 0.0;
    int n_obs = 0;
};

/// Closed-form least-squares fit of a*d + b to the SfM camera depths
/// observed in this chart (observations given as UV + world position), then
/// applies it to the chart. Falls back to a scale-only fit when the normal
/// equations are degenerate or would give a <= 0.
AffineFit affine_prealign(Chart& chart,
                          std::span<const std::pair<core::Vec2d, Vec3d>> observations);

// ---------------------------------------------------------------------------
// Differential geometry of point grids (shared by charts and surfel grids).

/// Finite-difference stencil used for one axis of one pixel; tangent =
/// (p[ib] - p[ia]) * scale. ok=false when no valid neighbor exists.
struct Stencil {
    int ia = 0, ib = 0;
    double scale = 0.0;
    bool ok = false;
};

struct GridGeometry {
    int w = 0, h = 0;
    std::vector<Stencil> sx, sy;        // per pixel
    std::vector<Vec3d> tu, tv;          // tangents
    std::vector<Vec3d> normals;         // unit, oriented toward the camera
    std::vector<double> cross_len;      // |tu x tv|
    std::vector<double> orient_sign;    // +-1 applied after normalization
    std::vector<uint8_t> flags;         // 1 = degenerate (normal = view dir)
    std::vector<double> curvature;      // mean curvature, 0 at flagged pixels
};

/// Normals from central differences (one-sided at borders / next to invalid
/// pixels), oriented toward cam_center; mean curvature as half the
/// divergence of the normal map scaled by the inverse local metric.
GridGeometry compute_grid_geometry(std::span<const Vec3d> points,
                                   std::span<const uint8_t> valid, int w, int h,
                                   const Vec3d& cam_center);

/// Adjoint of compute_grid_geometry: scatters upstream normal and curvature
/// gradients into d_points. Flagged pixels are treated as constants.
void grid_geometry_backward(const GridGeometry& g, std::span<const Vec3d> points,
                            std::span<const uint8_t> valid,
                            std::span<const Vec3d> d_normals,
                            std::span<const double> d_curvature,
                            std::span<Vec3d> d_points);

}  // namespace chartsurf::atlas
