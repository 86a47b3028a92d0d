// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/scene/bundle.hpp"
#include "chartsurf/scene/scene_spec.hpp"

namespace chartsurf::scene {

struct RayHit {
    bool hit = false;
    double t = 0.0;  // parameter along the (unnormalized) ray: camera depth
    int primitive = -1;
    core::Vec3d point{};
    core::Vec3d normal{};  // oriented against the ray
};

/// Nearest intersection of ray origin + t*dir with the scene, t > t_min.
RayHit cast_ray(const SceneSpec& spec, const core::Vec3d& origin, const core::Vec3d& dir,
                double t_min = 1e-9);

struct ViewRender {
    core::DepthMap depth;     // camera z-depth; 0 where no hit
    core::IdMap object_id;    // -1 where no hit
    core::ColorImage color;   // shaded, quantized to 8-bit levels
};

/// Renders one view by per-pixel analytic ray casting. Throws Error
/// ("empty view") when no pixel hits any primitive.
ViewRender render_view(const SceneSpec& spec, const core::Camera& cam);

/// Tessellated ground-truth mesh of all primitives.
core::TriangleMesh tessellate(const SceneSpec& spec, int sphere_rings = 64);

}  // namespace chartsurf::scene
