// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/scene/raycast.hpp"

namespace chartsurf::scene {

/// Applies the synthetic monodepth corruption to one view's clean depth:
/// per-object multiplicative scale, then a per-view global affine a*d + b,
/// then bounded multiplicative pixel noise. Deterministic in
/// (spec.seed, view_index). Invalid pixels (depth <= 0) stay invalid.
core::DepthMap corrupt_depth(const core::DepthMap& clean, const core::IdMap& object_id,
                             const CorruptionSpec& spec, int view_index = 0);

/// Samples multi-view-consistent surface points from clean depths and
/// displaces an exact outlier fraction by uniform offsets of up to 10% of
/// the scene diameter. Observations are generated for every view whose
/// clean depth matches the reprojection within 1%.
std::vector<SfmPoint> sample_sfm_points(const std::vector<core::DepthMap>& clean_depths,
                                        const std::vector<core::Camera>& cameras, int count,
                                        const CorruptionSpec& spec, double scene_diameter,
                                        std::vector<bool>* outlier_mask = nullptr);

/// Renders the scene, corrupts its depths, samples SfM points, and returns
/// the bundle plus evaluation-only ground truth.
void generate_scene(const SceneSpec& scene, const CorruptionSpec& corruption, int sfm_count,
                    SceneBundle& bundle, GroundTruth& gt);

}  // namespace chartsurf::scene
