// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/core/vec.hpp"

namespace chartsurf::core {

/// Pinhole camera. World-to-camera convention: p_cam = R * p_world + t,
/// right-handed, +z forward. Arbitrary principal points are supported.
class Camera {
  public:
    Camera() = default;
    /// Validates orthonormality of `rotation` (det = 1, R^T R = I, both to
    /// 1e-9) and the intrinsics layout; throws Error on violation.
    Camera(const Mat3d& rotation, const Vec3d& translation, const Mat3d& intrinsics,
           int width, int height);

    static Camera look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up,
                          double fx, double fy, double cx, double cy, int width, int height);

    const Mat3d& rotation() const { return rot_; }
    const Vec3d& translation() const { return t_; }
    const Mat3d& intrinsics() const { return k_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double fx() const { return k_(0, 0); }
    double fy() const { return k_(1, 1); }
    double cx() const { return k_(0, 2); }
    double cy() const { return k_(1, 2); }

    Vec3d center() const { return rot_.transposed() * (-t_); }

    Vec3d to_camera(const Vec3d& p_world) const { return rot_ * p_world + t_; }

    /// Camera-frame depth (z) of a world point.
    double depth_of(const Vec3d& p_world) const { return rot_.row(2).dot(p_world) + t_.z; }

    /// World-space direction of the ray through pixel (u, v), unnormalized;
    /// scaled so that point = center + t * dir has camera depth exactly t.
    Vec3d pixel_ray_dir(double u, double v) const;

    /// Returns a copy with intrinsics and size rescaled by (sx, sy).
    Camera rescaled(double sx, double sy, int new_width, int new_height) const;

  private:
    Mat3d rot_ = Mat3d::identity();
    Vec3d t_{};
    Mat3d k_ = Mat3d::identity();
    int width_ = 0, height_ = 0;
};

struct Projection {
    double u = 0.0, v = 0.0, z = 0.0;
    bool behind = false;  // z <= 1e-9; caller decides whether to discard
};

/// Perspective projection via K * (R * p + t). Never throws; `behind` set
/// when the point is at or behind the camera plane.
Projection project_point(const Camera& cam, const Vec3d& p_world);

/// Inverse of project_point. Throws Error for z <= 0.
Vec3d backproject_pixel(const Camera& cam, double u, double v, double z);

}  // namespace chartsurf::core
