// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/atlas/chart.hpp"

#include <cmath>

#include "chartsurf/core/error.hpp"
#include "chartsurf/core/parallel.hpp"

namespace chartsurf::atlas {

void Chart::refresh_reference_maps() {
    const Vec3d center = camera.center();
    initial_depths.resize(initial_points.size());
    ray_dirs.resize(initial_points.size());
    for (size_t i = 0; i < initial_points.size(); ++i) {
        if (valid[i] == 0) {
            initial_depths[i] = 0.0;
            ray_dirs[i] = Vec3d{0, 0, 0};
            continue;
        }
        initial_depths[i] = camera.depth_of(initial_points[i]);
        ray_dirs[i] = (initial_points[i] - center).normalized();
    }
    GridGeometry g = compute_grid_geometry(initial_points, valid, w, h, center);
    ref_normals = std::move(g.normals);
    ref_curvature = std::move(g.curvature);
    ref_flags = std::move(g.flags);
}

Chart init_chart(const core::DepthMap& depth, const Camera& camera, int view_index,
                 int max_side) {
    CHARTSURF_CHECK_MSG(depth.width() == camera.width() && depth.height() == camera.height(),
                        "depth map size must match the camera");
    Chart chart;
    chart.view = view_index;

    core::DepthMap resampled = depth;
    Camera cam = camera;
    const int longest = std::max(depth.width(), depth.height());
    if (longest > max_side) {
        const double s = static_cast<double>(max_side) / longest;
        const int nw = std::max(8, static_cast<int>(std::lround(depth.width() * s)));
        const int nh = std::max(8, static_cast<int>(std::lround(depth.height() * s)));
        resampled = core::DepthMap(nw, nh, 0.f);
        for (int y = 0; y < nh; ++y)
            for (int x = 0; x < nw; ++x) {
                // Sample the source at the matching pixel center.
                const double sx = (x + 0.5) * depth.width() / nw - 0.5;
                const double sy = (y + 0.5) * depth.height() / nh - 0.5;
                const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, depth.width() - 1);
                const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, depth.height() - 1);
                const int x1 = std::min(x0 + 1, depth.width() - 1);
                const int y1 = std::min(y0 + 1, depth.height() - 1);
                const float d00 = depth.at(x0, y0), d10 = depth.at(x1, y0);
                const float d01 = depth.at(x0, y1), d11 = depth.at(x1, y1);
                if (d00 <= 0.f || d10 <= 0.f || d01 <= 0.f || d11 <= 0.f) continue;
                const double fx = std::clamp(sx - x0, 0.0, 1.0);
                const double fy = std::clamp(sy - y0, 0.0, 1.0);
                resampled.at(x, y) = static_cast<float>((1 - fy) * ((1 - fx) * d00 + fx * d10) +
                                                        fy * ((1 - fx) * d01 + fx * d11));
            }
        cam = camera.rescaled(static_cast<double>(nw) / depth.width(),
                              static_cast<double>(nh) / depth.height(), nw, nh);
    }

    chart.w = resampled.width();
    chart.h = resampled.height();
    CHARTSURF_CHECK_MSG(chart.w >= 8 && chart.h >= 8, "chart must be at least 8x8");
    chart.camera = cam;
    const size_t n = static_cast<size_t>(chart.w) * chart.h;
    chart.initial_points.assign(n, Vec3d{});
    chart.valid.assign(n, 0);
    size_t n_valid = 0;
    for (int y = 0; y < chart.h; ++y)
        for (int x = 0; x < chart.w; ++x) {
            const float d = resampled.at(x, y);
            if (d <= 0.f) continue;
            chart.initial_points[chart.idx(x, y)] =
                core::backproject_pixel(cam, x + 0.5, y + 0.5, d);
            chart.valid[chart.idx(x, y)] = 1;
            ++n_valid;
        }
    CHARTSURF_CHECK_MSG(n_valid > 0, "init_chart: depth map has no valid pixel");
    chart.refresh_reference_maps();
    return chart;
}

AffineFit affine_prealign(Chart& chart,
                          std::span<const std::pair<core::Vec2d, Vec3d>> observations) {
    double sd = 0, sdd = 0, sz = 0, sdz = 0;
    int m = 0;
    for (const auto& [uv, p] : observations) {
        // Bilinear sample of the current chart depth at the observation.
        const double gx = std::clamp(uv.x * chart.w - 0.5, 0.0, chart.w - 1.0);
        const double gy = std::clamp(uv.y * chart.h - 0.5, 0.0, chart.h - 1.0);
        const int x0 = std::min(static_cast<int>(gx), chart.w - 1);
        const int y0 = std::min(static_cast<int>(gy), chart.h - 1);
        const int x1 = std::min(x0 + 1, chart.w - 1), y1 = std::min(y0 + 1, chart.h - 1);
        if (!chart.is_valid(x0, y0) || !chart.is_valid(x1, y0) || !chart.is_valid(x0, y1) ||
            !chart.is_valid(x1, y1))
            continue;
        const double fx = gx - x0, fy = gy - y0;
        const double d =
            (1 - fy) * ((1 - fx) * chart.initial_depths[chart.idx(x0, y0)] +
                        fx * chart.initial_depths[chart.idx(x1, y0)]) +
            fy * ((1 - fx) * chart.initial_depths[chart.idx(x0, y1)] +
                  fx * chart.initial_depths[chart.idx(x1, y1)]);
        const double z = chart.camera.depth_of(p);
        if (z <= 0.0) continue;
        sd += d;
        sdd += d * d;
        sz += z;
        sdz += d * z;
        ++m;
    }
    AffineFit fit;
    fit.n_obs = m;
    if (m == 0) return fit;  // nothing to align to

    const double det = m * sdd - sd * sd;
    bool scale_only = m < 2 || std::fabs(det) <= 1e-12 * std::max(1.0, m * sdd);
    if (!scale_only) {
        fit.a = (m * sdz - sd * sz) / det;
        fit.b = (sdd * sz - sd * sdz) / det;
        if (fit.a <= 0.0) scale_only = true;
    }
    if (scale_only) {
        fit.a = sdd > 0.0 ? sdz / sdd : 1.0;
        fit.b = 0.0;
        if (fit.a <= 0.0) fit.a = 1.0;
    }

    for (int y = 0; y < chart.h; ++y)
        for (int x = 0; x < chart.w; ++x) {
            const size_t i = chart.idx(x, y);
            if (chart.valid[i] == 0) continue;
            const double nd = fit.a * chart.initial_depths[i] + fit.b;
            if (nd <= 0.0) {
                chart.valid[i] = 0;
                continue;
            }
            chart.initial_points[i] =
                core::backproject_pixel(chart.camera, x + 0.5, y + 0.5, nd);
        }
    chart.refresh_reference_maps();
    return fit;
}

namespace {

Stencil make_stencil(std::span<const uint8_t> valid, int w, int h, int x, int y, bool x_axis) {
    const auto idx = [&](int xx, int yy) { return yy * w + xx; };
    const int lo = x_axis ? x - 1 : y - 1;
    const int hi = x_axis ? x + 1 : y + 1;
    const int limit = x_axis ? w : h;
    const bool has_lo = lo >= 0 && valid[x_axis ? idx(lo, y) : idx(x, lo)] != 0;
    const bool has_hi = hi < limit && valid[x_axis ? idx(hi, y) : idx(x, hi)] != 0;
    Stencil s;
    if (has_lo && has_hi) {
        s = {x_axis ? idx(lo, y) : idx(x, lo), x_axis ? idx(hi, y) : idx(x, hi), 0.5, true};
    } else if (has_hi) {
        s = {idx(x, y), x_axis ? idx(hi, y) : idx(x, hi), 1.0, true};
    } else if (has_lo) {
        s = {x_axis ? idx(lo, y) : idx(x, lo), idx(x, y), 1.0, true};
    }
    return s;
}

}  // namespace

GridGeometry compute_grid_geometry(std::span<const Vec3d> points,
                                   std::span<const uint8_t> valid, int w, int h,
                                   const Vec3d& cam_center) {
    CHARTSURF_CHECK_MSG(w >= 3 && h >= 3, "grid geometry needs at least 3x3");
    GridGeometry g;
    g.w = w;
    g.h = h;
    const size_t n = static_cast<size_t>(w) * h;
    g.sx.resize(n);
    g.sy.resize(n);
    g.tu.assign(n, Vec3d{});
    g.tv.assign(n, Vec3d{});
    g.normals.assign(n, Vec3d{});
    g.cross_len.assign(n, 0.0);
    g.orient_sign.assign(n, 1.0);
    g.flags.assign(n, 0);
    g.curvature.assign(n, 0.0);

    core::parallel_chunks(static_cast<size_t>(h), 16, [&](size_t, size_t yb, size_t ye) {
        for (size_t yy = yb; yy < ye; ++yy) {
            const int y = static_cast<int>(yy);
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                if (valid[i] == 0) {
                    g.flags[i] = 1;
                    continue;
                }
                g.sx[i] = make_stencil(valid, w, h, x, y, true);
                g.sy[i] = make_stencil(valid, w, h, x, y, false);
                if (!g.sx[i].ok || !g.sy[i].ok) {
                    g.flags[i] = 1;
                    g.normals[i] = (cam_center - points[i]).normalized();
                    continue;
                }
                const Vec3d tu = (points[g.sx[i].ib] - points[g.sx[i].ia]) * g.sx[i].scale;
                const Vec3d tv = (points[g.sy[i].ib] - points[g.sy[i].ia]) * g.sy[i].scale;
                g.tu[i] = tu;
                g.tv[i] = tv;
                const Vec3d c = tu.cross(tv);
                const double len = c.norm();
                if (len < 1e-14 * (tu.norm() * tv.norm() + 1e-300)) {
                    g.flags[i] = 1;
                    g.normals[i] = (cam_center - points[i]).normalized();
                    continue;
                }
                g.cross_len[i] = len;
                Vec3d nrm = c / len;
                if (nrm.dot(cam_center - points[i]) < 0.0) {
                    nrm = -nrm;
                    g.orient_sign[i] = -1.0;
                }
                g.normals[i] = nrm;
            }
        }
    });

    // Curvature pass: needs the full normal grid.
    core::parallel_chunks(static_cast<size_t>(h), 16, [&](size_t, size_t yb, size_t ye) {
        for (size_t yy = yb; yy < ye; ++yy) {
            const int y = static_cast<int>(yy);
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                if (valid[i] == 0 || g.flags[i] != 0) continue;
                const Vec3d dnu = (g.normals[g.sx[i].ib] - g.normals[g.sx[i].ia]) * g.sx[i].scale;
                const Vec3d dnv = (g.normals[g.sy[i].ib] - g.normals[g.sy[i].ia]) * g.sy[i].scale;
                const double bu = g.tu[i].squared_norm(), bv = g.tv[i].squared_norm();
                if (bu <= 0.0 || bv <= 0.0) continue;
                g.curvature[i] = 0.5 * (dnu.dot(g.tu[i]) / bu + dnv.dot(g.tv[i]) / bv);
            }
        }
    });
    return g;
}

void grid_geometry_backward(const GridGeometry& g, std::span<const Vec3d> points,
                            std::span<const uint8_t> valid,
                            std::span<const Vec3d> d_normals,
                            std::span<const double> d_curvature,
                            std::span<Vec3d> d_points) {
    (void)points;
    const int w = g.w, h = g.h;
    const size_t n = static_cast<size_t>(w) * h;
    std::vector<Vec3d> dn(n, Vec3d{});
    if (!d_normals.empty())
        for (size_t i = 0; i < n; ++i) dn[i] = d_normals[i];

    std::vector<Vec3d> dtu(n, Vec3d{}), dtv(n, Vec3d{});

    // Curvature adjoint: into the normal grid and the local tangents.
    if (!d_curvature.empty()) {
        for (size_t i = 0; i < n; ++i) {
            const double dm = d_curvature[i];
            if (dm == 0.0 || valid[i] == 0 || g.flags[i] != 0) continue;
            const Vec3d tu = g.tu[i], tv = g.tv[i];
            const double bu = tu.squared_norm(), bv = tv.squared_norm();
            if (bu <= 0.0 || bv <= 0.0) continue;
            const Vec3d dnu = (g.normals[g.sx[i].ib] - g.normals[g.sx[i].ia]) * g.sx[i].scale;
            const Vec3d dnv = (g.normals[g.sy[i].ib] - g.normals[g.sy[i].ia]) * g.sy[i].scale;
            // M = 1/2 (dnu.tu/bu + dnv.tv/bv)
            const Vec3d d_dnu = tu * (0.5 * dm / bu);
            const Vec3d d_dnv = tv * (0.5 * dm / bv);
            dn[g.sx[i].ib] += d_dnu * g.sx[i].scale;
            dn[g.sx[i].ia] -= d_dnu * g.sx[i].scale;
            dn[g.sy[i].ib] += d_dnv * g.sy[i].scale;
            dn[g.sy[i].ia] -= d_dnv * g.sy[i].scale;
            dtu[i] += (dnu * (1.0 / bu) - tu * (2.0 * dnu.dot(tu) / (bu * bu))) * (0.5 * dm);
            dtv[i] += (dnv * (1.0 / bv) - tv * (2.0 * dnv.dot(tv) / (bv * bv))) * (0.5 * dm);
        }
    }

    // Normal adjoint: n = s * c / |c| with c = tu x tv.
    for (size_t i = 0; i < n; ++i) {
        if (valid[i] == 0 || g.flags[i] != 0) continue;
        const Vec3d gn = dn[i];
        if (gn.x == 0 && gn.y == 0 && gn.z == 0) continue;
        const Vec3d tu = g.tu[i], tv = g.tv[i];
        const Vec3d c = tu.cross(tv);
        const double len = g.cross_len[i];
        const Vec3d dc = (gn - c * (c.dot(gn) / (len * len))) * (g.orient_sign[i] / len);
        dtu[i] += tv.cross(dc);
        dtv[i] += dc.cross(tu);
    }

    // Tangent adjoint into points.
    for (size_t i = 0; i < n; ++i) {
        if (valid[i] == 0 || g.flags[i] != 0) continue;
        if (dtu[i].x != 0 || dtu[i].y != 0 || dtu[i].z != 0) {
            d_points[g.sx[i].ib] += dtu[i] * g.sx[i].scale;
            d_points[g.sx[i].ia] -= dtu[i] * g.sx[i].scale;
        }
        if (dtv[i].x != 0 || dtv[i].y != 0 || dtv[i].z != 0) {
            d_points[g.sy[i].ib] += dtv[i] * g.sy[i].scale;
            d_points[g.sy[i].ia] -= dtv[i] * g.sy[i].scale;
        }
    }
}

}  // namespace chartsurf::atlas
