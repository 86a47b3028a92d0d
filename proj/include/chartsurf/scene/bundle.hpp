// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "chartsurf/core/camera.hpp"
#include "chartsurf/core/image.hpp"
#include "chartsurf/core/mesh.hpp"

namespace chartsurf::scene {

/// One sparse multi-view point with its per-view pixel observations.
struct SfmPoint {
    core::Vec3d position;
    struct Obs {
        int view = 0;
        double u = 0.0, v = 0.0;
    };
    std::vector<Obs> observations;
};

/// The pipeline's input contract: cameras, images in [0,1], depth maps in
/// meters (possibly corrupted), and SfM points.
struct SceneBundle {
    std::vector<core::Camera> cameras;
    std::vector<core::ColorImage> images;
    std::vector<core::DepthMap> depths;
    std::vector<SfmPoint> sfm_points;

    int n_views() const { return static_cast<int>(cameras.size()); }

    /// Checks matching list lengths and observation validity; throws Error.
    void validate() const;

    /// Bounding diameter of all valid backprojected depth samples.
    double scene_diameter() const;
};

/// Evaluation-only data retained by the generator; never an input to the
/// reconstruction stages.
struct GroundTruth {
    core::TriangleMesh mesh;
    std::vector<core::DepthMap> clean_depths;
    std::vector<core::IdMap> object_ids;           // -1 where no hit
    std::vector<bool> sfm_outlier_mask;            // parallel to bundle.sfm_points
    std::vector<core::Camera> test_cameras;        // held-out views
    std::vector<core::ColorImage> test_images;
    double diameter = 0.0;
};

}  // namespace chartsurf::scene
