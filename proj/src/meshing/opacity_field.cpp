// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/meshing/opacity_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chartsurf/core/error.hpp"

namespace chartsurf::meshing {

SampleGrid::SampleGrid(std::span<const core::Vec3d> positions, std::span<const double> radii) {
    CHARTSURF_CHECK(positions.size() == radii.size());
    pos_.assign(positions.begin(), positions.end());
    radius_.assign(radii.begin(), radii.end());
    if (pos_.empty()) return;

    std::vector<double> sorted = radius_;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    fallback_ = sorted[sorted.size() / 2];

    core::Vec3d hi = pos_[0];
    lo_ = pos_[0];
    for (const auto& p : pos_) {
        lo_.x = std::min(lo_.x, p.x);
        lo_.y = std::min(lo_.y, p.y);
        lo_.z = std::min(lo_.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    const double diag = (hi - lo_).norm();
    const double target_cells = std::cbrt(static_cast<double>(pos_.size()));
    cell_ = std::max(diag / std::max(target_cells, 1.0), 1e-12);
    nx_ = std::max(1, static_cast<int>((hi.x - lo_.x) / cell_) + 1);
    ny_ = std::max(1, static_cast<int>((hi.y - lo_.y) / cell_) + 1);
    nz_ = std::max(1, static_cast<int>((hi.z - lo_.z) / cell_) + 1);
    cells_.resize(static_cast<size_t>(nx_) * ny_ * nz_);
    for (size_t i = 0; i < pos_.size(); ++i) {
        const int x = std::clamp(static_cast<int>((pos_[i].x - lo_.x) / cell_), 0, nx_ - 1);
        const int y = std::clamp(static_cast<int>((pos_[i].y - lo_.y) / cell_), 0, ny_ - 1);
        const int z = std::clamp(static_cast<int>((pos_[i].z - lo_.z) / cell_), 0, nz_ - 1);
        cells_[cell_idx(x, y, z)].push_back(static_cast<int>(i));
    }
}

double SampleGrid::nearest_radius(const core::Vec3d& p) const {
    if (pos_.empty()) return fallback_;
    const int cx = std::clamp(static_cast<int>((p.x - lo_.x) / cell_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y - lo_.y) / cell_), 0, ny_ - 1);
    const int cz = std::clamp(static_cast<int>((p.z - lo_.z) / cell_), 0, nz_ - 1);
    double best = std::numeric_limits<double>::infinity();
    int best_i = -1;
    const int max_ring = std::max({nx_, ny_, nz_});
    for (int ring = 0; ring <= max_ring; ++ring) {
        // Expanding shells; stop once the found distance beats the shell.
        if (best_i >= 0 && best <= (ring - 1) * cell_) break;
        for (int z = std::max(0, cz - ring); z <= std::min(nz_ - 1, cz + ring); ++z)
            for (int y = std::max(0, cy - ring); y <= std::min(ny_ - 1, cy + ring); ++y)
                for (int x = std::max(0, cx - ring); x <= std::min(nx_ - 1, cx + ring); ++x) {
                    if (std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)}) != ring)
                        continue;
                    for (int i : cells_[cell_idx(x, y, z)]) {
                        const double d = (pos_[i] - p).norm();
                        if (d < best) {
                            best = d;
                            best_i = i;
                        }
                    }
                }
    }
    return best_i >= 0 ? radius_[best_i] : fallback_;
}

BinaryOpacityField::BinaryOpacityField(std::vector<core::DepthMap> depths,
                                       std::vector<core::Camera> cameras, SampleGrid dilation,
                                       double kappa)
    : depths_(std::move(depths)),
      cameras_(std::move(cameras)),
      dilation_(std::move(dilation)),
      kappa_(kappa) {
    CHARTSURF_CHECK(depths_.size() == cameras_.size());
    CHARTSURF_CHECK_MSG(kappa_ >= 0.0, "dilation must be non-negative");
}

double BinaryOpacityField::dilation_at(const core::Vec3d& p) const {
    return kappa_ * dilation_.nearest_radius(p);
}

bool BinaryOpacityField::occupied(const core::Vec3d& p) const {
    const double delta = dilation_at(p);
    bool seen = false;
    for (size_t v = 0; v < cameras_.size(); ++v) {
        const auto pr = core::project_point(cameras_[v], p);
        if (pr.behind) continue;
        if (pr.u < 0 || pr.v < 0 || pr.u >= depths_[v].width() || pr.v >= depths_[v].height())
            continue;
        const float d = depths_[v].at(static_cast<int>(pr.u), static_cast<int>(pr.v));
        seen = true;
        if (d <= 0.f) return false;  // the ray sees through to the background
        if (pr.z < d - delta) return false;  // observed free space
    }
    return seen;
}

}  // namespace chartsurf::meshing
