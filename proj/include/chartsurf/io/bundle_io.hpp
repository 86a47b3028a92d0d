// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "chartsurf/scene/bundle.hpp"

namespace chartsurf::io {

/// Bundle directory layout:
///   cameras.json   array of {K: 9 row-major, R: 9 row-major, t: 3, width, height}
///   images/view_###.png
///   depth/view_###.pfm          (meters, little-endian)
///   sfm.json       array of {xyz:[3], obs:[{view,u,v}]}
///   gt/mesh.ply    optional ground truth
///   test/          optional held-out cameras.json + images/
/// Convention: p_cam = R * p + t, right-handed, +z forward.
void write_bundle(const scene::SceneBundle& bundle, const std::filesystem::path& dir,
                  const scene::GroundTruth* gt = nullptr);

scene::SceneBundle read_bundle(const std::filesystem::path& dir);

/// Reads the optional held-out views; returns false when absent.
bool read_test_views(const std::filesystem::path& dir, std::vector<core::Camera>& cameras,
                     std::vector<core::ColorImage>& images);

bool read_gt_mesh(const std::filesystem::path& dir, core::TriangleMesh& mesh);

}  // namespace chartsurf::io
