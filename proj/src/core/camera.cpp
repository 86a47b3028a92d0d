// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/core/camera.hpp"

#include <cmath>

#include "chartsurf/core/error.hpp"

namespace chartsurf::core {

namespace {
constexpr double kOrthoTol = 1e-9;
}

Camera::Camera(const Mat3d& rotation, const Vec3d& translation, const Mat3d& intrinsics,
               int width, int height)
    : rot_(rotation), t_(translation), k_(intrinsics), width_(width), height_(height) {
    CHARTSURF_CHECK_MSG(std::fabs(rot_.det() - 1.0) <= kOrthoTol,
                        "rotation determinant " << rot_.det());
    const Mat3d rtr = rot_.transposed() * rot_;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double want = i == j ? 1.0 : 0.0;
            CHARTSURF_CHECK_MSG(std::fabs(rtr(i, j) - want) <= kOrthoTol,
                                "rotation not orthonormal at (" << i << "," << j << ")");
        }
    CHARTSURF_CHECK_MSG(fx() > 0.0 && fy() > 0.0, "focal lengths must be positive");
    CHARTSURF_CHECK_MSG(k_(1, 0) == 0.0 && k_(2, 0) == 0.0 && k_(2, 1) == 0.0 && k_(2, 2) == 1.0,
                        "intrinsics must be upper triangular with K[2][2] = 1");
    CHARTSURF_CHECK_MSG(width_ > 0 && height_ > 0, "image size");
    CHARTSURF_CHECK_MSG(cx() > 0.0 && cx() < width_ && cy() > 0.0 && cy() < height_,
                        "principal point outside image");
}

Camera Camera::look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up,
                       double fx, double fy, double cx, double cy, int width, int height) {
    const Vec3d fwd = (target - eye).normalized();
    Vec3d right = fwd.cross(up).normalized();
    if (right.norm() < 1e-12) right = fwd.cross(Vec3d{0, 0, 1}).normalized();
    const Vec3d down = fwd.cross(right);
    const Mat3d rot = Mat3d::from_rows(right, down, fwd);
    Mat3d k = Mat3d::identity();
    k(0, 0) = fx;
    k(1, 1) = fy;
    k(0, 2) = cx;
    k(1, 2) = cy;
    return Camera(rot, rot * (-eye), k, width, height);
}

Vec3d Camera::pixel_ray_dir(double u, double v) const {
    // K^-1 * (u, v, 1), rotated to world. K is upper triangular with unit
    // bottom-right entry, so the camera z component is exactly 1.
    const double xs = (u - cx() - k_(0, 1) * (v - cy()) / fy()) / fx();
    const double ys = (v - cy()) / fy();
    return rot_.transposed() * Vec3d{xs, ys, 1.0};
}

Camera Camera::rescaled(double sx, double sy, int new_width, int new_height) const {
    Mat3d k = k_;
    k(0, 0) *= sx;
    k(0, 1) *= sx;
    k(0, 2) *= sx;
    k(1, 1) *= sy;
    k(1, 2) *= sy;
    return Camera(rot_, t_, k, new_width, new_height);
}

Projection project_point(const Camera& cam, const Vec3d& p_world) {
    const Vec3d pc = cam.to_camera(p_world);
    Projection pr;
    pr.z = pc.z;
    pr.behind = pc.z <= 1e-9;
    if (!pr.behind) {
        const Mat3d& k = cam.intrinsics();
        pr.u = (k(0, 0) * pc.x + k(0, 1) * pc.y) / pc.z + k(0, 2);
        pr.v = k(1, 1) * pc.y / pc.z + k(1, 2);
    }
    return pr;
}

Vec3d backproject_pixel(const Camera& cam, double u, double v, double z) {
    CHARTSURF_CHECK_MSG(z > 0.0, "backproject_pixel requires positive depth, got " << z);
    const double ys = (v - cam.cy()) / cam.fy();
    const double xs = (u - cam.cx() - cam.intrinsics()(0, 1) * ys) / cam.fx();
    const Vec3d pc{xs * z, ys * z, z};
    return cam.rotation().transposed() * (pc - cam.translation());
}

}  // namespace chartsurf::core
