// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/atlas/deform.hpp"
#include "chartsurf/scene/bundle.hpp"

namespace chartsurf::atlas {

/// Per-chart learnable color/opacity textures (chart resolution). Values
/// live in the ParamStore; this just records the group indices.
struct TextureGroups {
    size_t g_color = 0;    // w*h*3, rgb in [0,1]
    size_t g_opacity = 0;  // w*h logits, opacity = sigmoid
    bool present = false;
};

/// The full optimizable state: one chart + deformation model per view,
/// optional textures, and the parameter store that owns every learnable.
struct AtlasState {
    std::vector<Chart> charts;
    std::vector<DeformModel> models;
    std::vector<TextureGroups> textures;
    optim::ParamStore store;

    int n_charts() const { return static_cast<int>(charts.size()); }
};

struct AtlasBuildConfig {
    DeformConfig deform;
    int max_side = 512;
    /// < 0 picks the ratio from the view count: 0.1 for <= 3 views, 0.4
    /// otherwise.
    double encoding_ratio_override = -1.0;
    uint64_t seed = 1;
};

/// Initializes charts from the bundle depths, applies the closed-form
/// affine pre-alignment against the SfM points, and registers the
/// deformation parameters.
AtlasState build_atlas(const scene::SceneBundle& bundle, const AtlasBuildConfig& cfg);

/// Registers color/opacity textures for every chart. Color is initialized
/// from the bundle image (resampled to chart resolution), opacity logits to
/// `opacity_logit_init`.
void add_textures(AtlasState& atlas, const scene::SceneBundle& bundle, double opacity_logit_init,
                  double lr_color, double lr_opacity);

}  // namespace chartsurf::atlas
