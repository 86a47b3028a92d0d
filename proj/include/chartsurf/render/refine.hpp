// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/render/losses.hpp"

namespace chartsurf::render {

struct RefineConfig {
    RefineLossWeights weights;
    int iters = 3000;
    double lr_deform = 1e-3;
    double lr_color = 2.5e-2;
    double lr_opacity = 5e-2;
    double opacity_logit_init = 5.0;
    double grad_clip = 10.0;
    uint64_t seed = 1;
    core::Vec3d background{0, 0, 0};
};

struct RefineRecord {
    int iter = 0, view = 0;
    double photo = 0, structure = 0, distortion = 0, normal = 0, total = 0;
};

struct RefineReport {
    std::vector<RefineRecord> records;
    double wall_seconds = 0.0;
};

/// Stage-2 optimization: per iteration, one random training view is
/// rendered through on-the-fly surfels and the photometric, structure,
/// distortion and depth-normal losses drive the chart deformation and the
/// textures. Charts are switched to refinement mode (baked initial points,
/// 3-channel MLP output) and textures registered on entry when missing.
RefineReport run_refinement(AtlasState& atlas, const scene::SceneBundle& bundle,
                            const RefineConfig& cfg);

struct FreeStageConfig {
    RefineLossWeights weights;
    double lambda_depth = 0.75;
    int iters = 300;
    double lr_free = 1e-3;
    double lr_color = 2.5e-2;
    double lr_opacity = 5e-2;
    double grad_clip = 10.0;
    uint64_t seed = 1;
    core::Vec3d background{0, 0, 0};
};

struct FreeStageResult {
    FreeSurfelModel model;
    RefineReport report;
};

/// Third stage: the manifold freezes, surfel position/scale/rotation become
/// free parameters anchored by a confidence-weighted L1 depth loss against
/// the cached manifold depth maps; the structure term acts on the surfel
/// grids everywhere, without confidence weighting.
FreeStageResult run_free_gaussian_stage(AtlasState& atlas, const scene::SceneBundle& bundle,
                                        const FreeStageConfig& cfg);

/// Renders the current representation (manifold surfels, or free surfels
/// when a model is given) from an arbitrary camera.
RenderOutput render_scene(AtlasState& atlas, const core::Camera& camera,
                          const core::Vec3d& background,
                          const FreeSurfelModel* free_model = nullptr);

}  // namespace chartsurf::render
