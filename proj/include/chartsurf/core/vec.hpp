// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace chartsurf::core {

struct Vec2d {
    double x = 0.0, y = 0.0;

    Vec2d() = default;
    Vec2d(double x_, double y_) : x(x_), y(y_) {}

    Vec2d operator+(const Vec2d& o) const { return {x + o.x, y + o.y}; }
    Vec2d operator-(const Vec2d& o) const { return {x - o.x, y - o.y}; }
    Vec2d operator*(double s) const { return {x * s, y * s}; }
    Vec2d& operator+=(const Vec2d& o) { x += o.x; y += o.y; return *this; }
    double dot(const Vec2d& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3d {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3d() = default;
    Vec3d(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3d operator+(const Vec3d& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3d operator-(const Vec3d& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3d operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3d operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3d operator-() const { return {-x, -y, -z}; }
    Vec3d& operator+=(const Vec3d& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3d& operator-=(const Vec3d& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3d& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double dot(const Vec3d& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3d cross(const Vec3d& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double squared_norm() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(squared_norm()); }
    Vec3d normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3d{x / n, y / n, z / n} : Vec3d{0, 0, 0};
    }
    double l1_norm() const { return std::fabs(x) + std::fabs(y) + std::fabs(z); }
    bool all_finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3d operator*(double s, const Vec3d& v) { return v * s; }
inline Vec2d operator*(double s, const Vec2d& v) { return v * s; }

/// Row-major 3x3 matrix.
struct Mat3d {
    std::array<double, 9> m{};

    static Mat3d identity() {
        Mat3d r;
        r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return r;
    }
    static Mat3d from_rows(const Vec3d& r0, const Vec3d& r1, const Vec3d& r2) {
        Mat3d r;
        r.m = {r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z};
        return r;
    }

    double operator()(int r, int c) const { return m[static_cast<size_t>(r) * 3 + c]; }
    double& operator()(int r, int c) { return m[static_cast<size_t>(r) * 3 + c]; }

    Vec3d row(int r) const { return {m[r * 3 + 0], m[r * 3 + 1], m[r * 3 + 2]}; }
    Vec3d col(int c) const { return {m[0 + c], m[3 + c], m[6 + c]}; }

    Vec3d operator*(const Vec3d& v) const {
        return {row(0).dot(v), row(1).dot(v), row(2).dot(v)};
    }
    Mat3d operator*(const Mat3d& o) const {
        Mat3d r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r(i, j) = (*this)(i, 0) * o(0, j) + (*this)(i, 1) * o(1, j) + (*this)(i, 2) * o(2, j);
        return r;
    }
    Mat3d transposed() const {
        Mat3d r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
        return r;
    }
    double det() const {
        return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
               m[2] * (m[3] * m[7] - m[4] * m[6]);
    }
};

/// Solves A x = b for a 3x3 system by Cramer's rule. Returns false when
/// |det(A)| <= eps (x left untouched).
inline bool solve3x3(const Mat3d& a, const Vec3d& b, Vec3d& x, double eps = 1e-300) {
    const double d = a.det();
    if (std::fabs(d) <= eps) return false;
    Mat3d t = a;
    auto det_with_col = [&](int c) {
        Mat3d s = a;
        s(0, c) = b.x;
        s(1, c) = b.y;
        s(2, c) = b.z;
        return s.det();
    };
    (void)t;
    x = Vec3d{det_with_col(0) / d, det_with_col(1) / d, det_with_col(2) / d};
    return true;
}

struct Vec3f {
    float x = 0.f, y = 0.f, z = 0.f;
    Vec3f() = default;
    Vec3f(float x_, float y_, float z_) : x(x_), y(y_), z(z_) {}
    explicit Vec3f(const Vec3d& v)
        : x(static_cast<float>(v.x)), y(static_cast<float>(v.y)), z(static_cast<float>(v.z)) {}
    Vec3d to_double() const { return {x, y, z}; }
    bool operator==(const Vec3f& o) const { return x == o.x && y == o.y && z == o.z; }
};

}  // namespace chartsurf::core
