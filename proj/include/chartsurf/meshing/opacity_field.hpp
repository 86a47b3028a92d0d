// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "chartsurf/core/camera.hpp"
#include "chartsurf/core/image.hpp"

namespace chartsurf::meshing {

/// Surface samples with local radii, bucketed on a uniform grid for
/// nearest-sample queries (used by the adaptive dilation).
class SampleGrid {
  public:
    SampleGrid() = default;
    SampleGrid(std::span<const core::Vec3d> positions, std::span<const double> radii);

    /// Radius of the sample nearest to p (falls back to the median radius
    /// when the grid is empty).
    double nearest_radius(const core::Vec3d& p) const;

  private:
    std::vector<core::Vec3d> pos_;
    std::vector<double> radius_;
    core::Vec3d lo_{};
    double cell_ = 1.0;
    int nx_ = 0, ny_ = 0, nz_ = 0;
    std::vector<std::vector<int>> cells_;
    double fallback_ = 0.0;

    size_t cell_idx(int x, int y, int z) const {
        return (static_cast<size_t>(z) * ny_ + y) * nx_ + x;
    }
};

/// Occupancy from depth-map visibility with an adaptive dilation band:
/// a point is occupied iff every view that sees it places it at or behind
/// the rendered depth minus kappa times the local surfel radius. Points
/// visible in no view are free.
class BinaryOpacityField {
  public:
    BinaryOpacityField(std::vector<core::DepthMap> depths, std::vector<core::Camera> cameras,
                       SampleGrid dilation, double kappa = 1.0);

    bool occupied(const core::Vec3d& p) const;
    double dilation_at(const core::Vec3d& p) const;

  private:
    std::vector<core::DepthMap> depths_;
    std::vector<core::Camera> cameras_;
    SampleGrid dilation_;
    double kappa_;
};

}  // namespace chartsurf::meshing
