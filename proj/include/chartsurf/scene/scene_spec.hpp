// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chartsurf/core/camera.hpp"
#include "chartsurf/core/mesh.hpp"

namespace chartsurf::scene {

/// Analytic primitives. Used both for ray casting and for the ground-truth
/// mesh tessellation.
struct Primitive {
    enum class Kind { kPlane, kSphere, kBox };
    Kind kind = Kind::kPlane;

    // plane: finite rectangle
    core::Vec3d center{};
    core::Vec3d normal{0, 0, -1};
    core::Vec3d tangent{1, 0, 0};  // in-plane u axis; v axis = normal x tangent
    double half_u = 1.0, half_v = 1.0;

    // sphere
    double radius = 1.0;

    // axis-aligned box
    core::Vec3d box_min{}, box_max{};

    core::Vec3d albedo{0.7, 0.7, 0.7};

    static Primitive plane(const core::Vec3d& center, const core::Vec3d& normal,
                           const core::Vec3d& tangent, double half_u, double half_v,
                           const core::Vec3d& albedo);
    static Primitive sphere(const core::Vec3d& center, double radius, const core::Vec3d& albedo);
    static Primitive box(const core::Vec3d& lo, const core::Vec3d& hi, const core::Vec3d& albedo);
};

struct SceneSpec {
    std::vector<Primitive> primitives;
    std::vector<core::Camera> cameras;
    std::vector<core::Camera> test_cameras;  // held-out, clean renders only
    int width = 96, height = 96;
    double checker_size = 0.0;  // 0 disables the albedo checker modulation

    void validate() const;
};

/// Knobs for the synthetic "monodepth" corruption and SfM noise.
struct CorruptionSpec {
    double object_scale_min = 1.0, object_scale_max = 1.0;  // per object per view
    double view_scale_min = 1.0, view_scale_max = 1.0;      // global affine a
    double view_offset_max = 0.0;                           // global affine b in [-max, max]
    double pixel_noise = 0.0;                               // relative, bounded uniform
    double sfm_outlier_fraction = 0.0;
    uint64_t seed = 1;

    /// Test override: when non-empty, object k uses scale [k] in every view.
    std::vector<double> fixed_object_scales;

    void validate() const;
};

/// Built-in scenes. "boxplane" is the 5-view reference desk scene;
/// "sphere12" is a 12-view sphere; "plane1" a single fronto-parallel plane.
SceneSpec make_preset_scene(const std::string& name, int width, int height, int n_views);

}  // namespace chartsurf::scene
