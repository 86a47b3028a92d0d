// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/scene/scene_spec.hpp"

#include <cmath>

#include "chartsurf/core/error.hpp"

namespace chartsurf::scene {

using core::Camera;
using core::Vec3d;

Primitive Primitive::plane(const Vec3d& center, const Vec3d& normal, const Vec3d& tangent,
                           double half_u, double half_v, const Vec3d& albedo) {
    Primitive p;
    p.kind = Kind::kPlane;
    p.center = center;
    p.normal = normal.normalized();
    // Orthogonalize the tangent against the normal.
    Vec3d t = tangent - p.normal * tangent.dot(p.normal);
    CHARTSURF_CHECK_MSG(t.norm() > 1e-12, "plane tangent parallel to normal");
    p.tangent = t.normalized();
    p.half_u = half_u;
    p.half_v = half_v;
    p.albedo = albedo;
    return p;
}

Primitive Primitive::sphere(const Vec3d& center, double radius, const Vec3d& albedo) {
    CHARTSURF_CHECK_MSG(radius > 0.0, "sphere radius");
    Primitive p;
    p.kind = Kind::kSphere;
    p.center = center;
    p.radius = radius;
    p.albedo = albedo;
    return p;
}

Primitive Primitive::box(const Vec3d& lo, const Vec3d& hi, const Vec3d& albedo) {
    CHARTSURF_CHECK_MSG(lo.x < hi.x && lo.y < hi.y && lo.z < hi.z, "box extents");
    Primitive p;
    p.kind = Kind::kBox;
    p.box_min = lo;
    p.box_max = hi;
    p.albedo = albedo;
    return p;
}

void SceneSpec::validate() const {
    CHARTSURF_CHECK_MSG(!primitives.empty(), "scene needs at least one primitive");
    CHARTSURF_CHECK_MSG(!cameras.empty(), "scene needs at least one camera");
    CHARTSURF_CHECK_MSG(width > 0 && height > 0, "scene resolution");
}

void CorruptionSpec::validate() const {
    CHARTSURF_CHECK_MSG(object_scale_min > 0.0 && object_scale_min <= object_scale_max,
                        "object scale range");
    CHARTSURF_CHECK_MSG(view_scale_min > 0.0 && view_scale_min <= view_scale_max,
                        "view scale range");
    CHARTSURF_CHECK_MSG(view_offset_max >= 0.0, "view offset range");
    CHARTSURF_CHECK_MSG(pixel_noise >= 0.0 && pixel_noise < 1.0, "pixel noise");
    CHARTSURF_CHECK_MSG(sfm_outlier_fraction >= 0.0 && sfm_outlier_fraction < 1.0,
                        "outlier fraction must be in [0,1)");
}

namespace {

Camera orbit_camera(const Vec3d& target, double radius, double azimuth, double elevation,
                    double focal, int w, int h) {
    const Vec3d eye = target + Vec3d{radius * std::cos(elevation) * std::sin(azimuth),
                                     -radius * std::sin(elevation),
                                     -radius * std::cos(elevation) * std::cos(azimuth)};
    return Camera::look_at(eye, target, Vec3d{0, -1, 0}, focal, focal, 0.5 * w, 0.5 * h, w, h);
}

}  // namespace

SceneSpec make_preset_scene(const std::string& name, int width, int height, int n_views) {
    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    const double focal = 0.9 * width;

    if (name == "boxplane") {
        // A tabletop scene in true desk scale (objects around 20 cm at
        // roughly 70 cm distance), compact enough that every ground-truth
        // patch is observed by at least one training camera.
        spec.checker_size = 0.05;
        spec.primitives.push_back(Primitive::plane({0, 0.2, 0.75}, {0, -1, -0.12}, {1, 0, 0},
                                                   0.375, 0.325, {0.62, 0.6, 0.52}));
        spec.primitives.push_back(
            Primitive::box({-0.1875, -0.0375, 0.6}, {-0.0125, 0.18, 0.775}, {0.75, 0.33, 0.28}));
        spec.primitives.push_back(
            Primitive::sphere({0.1625, 0.0825, 0.6875}, 0.1125, {0.3, 0.45, 0.78}));
        const Vec3d target{0, 0.0625, 0.7};
        const int n = n_views > 0 ? n_views : 5;
        for (int i = 0; i < n; ++i) {
            const double az = -0.5 + 1.0 * (n == 1 ? 0.5 : static_cast<double>(i) / (n - 1));
            const double el = 0.5 + 0.12 * ((i % 2) == 0 ? 1.0 : -1.0);
            spec.cameras.push_back(orbit_camera(target, 0.725, az, el, focal, width, height));
        }
        for (int i = 0; i < 3; ++i) {
            const double az = -0.38 + 0.38 * i;
            spec.test_cameras.push_back(orbit_camera(target, 0.75, az, 0.4, focal, width, height));
        }
    } else if (name == "sphere12") {
        spec.primitives.push_back(Primitive::sphere({0, 0, 0}, 1.0, {0.72, 0.5, 0.3}));
        const int n = n_views > 0 ? n_views : 12;
        for (int i = 0; i < n; ++i) {
            const double az = 2.0 * M_PI * i / n;
            const double el = 0.25 * ((i % 3) - 1);
            spec.cameras.push_back(orbit_camera({0, 0, 0}, 3.0, az, el, focal, width, height));
        }
    } else if (name == "plane1") {
        spec.primitives.push_back(
            Primitive::plane({0, 0, 2.0}, {0, 0, -1}, {1, 0, 0}, 3.0, 3.0, {0.55, 0.62, 0.5}));
        spec.checker_size = 0.4;
        core::Mat3d k = core::Mat3d::identity();
        k(0, 0) = k(1, 1) = focal;
        k(0, 2) = 0.5 * width;
        k(1, 2) = 0.5 * height;
        const int n = n_views > 0 ? n_views : 1;
        for (int i = 0; i < n; ++i) {
            const Vec3d eye{-0.3 + 0.6 * (n == 1 ? 0.5 : static_cast<double>(i) / (n - 1)), 0.0,
                            0.0};
            spec.cameras.push_back(
                Camera::look_at(eye, {0, 0, 2.0}, {0, -1, 0}, focal, focal, 0.5 * width,
                                0.5 * height, width, height));
        }
    } else {
        throw Error("unknown scene preset '" + name + "'");
    }
    spec.validate();
    return spec;
}

}  // namespace chartsurf::scene
