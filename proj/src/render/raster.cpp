// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/render/raster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "chartsurf/core/parallel.hpp"

namespace chartsurf::render {

namespace {

constexpr double kNear = 1e-9;
constexpr double kCutoffSq = 9.0;  // 3 sigma
constexpr int kTile = 16;
constexpr double kDepthEps = 1e-8;

struct TileGrid {
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<int>> lists;  // surfel indices, ascending
};

/// Exact screen-space slope range of a camera-space sphere: the tangent
/// cone of (x0, z0, r) gives x/z in [(x0 z0 -+ r sqrt(x0^2+z0^2-r^2)) /
/// (z0^2 - r^2)]. Requires z0 > r.
void sphere_slope_range(double x0, double z0, double r, double& lo, double& hi) {
    const double disc = std::sqrt(std::max(0.0, x0 * x0 + z0 * z0 - r * r));
    const double denom = z0 * z0 - r * r;
    lo = (x0 * z0 - r * disc) / denom;
    hi = (x0 * z0 + r * disc) / denom;
}

TileGrid build_tiles(std::span<const Surfel> surfels, const Camera& cam) {
    TileGrid tg;
    tg.tiles_x = (cam.width() + kTile - 1) / kTile;
    tg.tiles_y = (cam.height() + kTile - 1) / kTile;
    tg.lists.resize(static_cast<size_t>(tg.tiles_x) * tg.tiles_y);
    const bool has_skew = cam.intrinsics()(0, 1) != 0.0;
    for (int s = 0; s < static_cast<int>(surfels.size()); ++s) {
        const Surfel& sf = surfels[s];
        const double r3 = 3.0 * std::sqrt(sf.tu.squared_norm() + sf.tv.squared_norm());
        const core::Vec3d pc = cam.to_camera(sf.center);
        if (pc.z + r3 <= kNear) continue;  // entirely behind the camera
        int x0, x1, y0, y1;
        if (has_skew || pc.z - r3 <= 1e-6) {
            // The bounding sphere reaches the camera plane (or the camera
            // has skew): fall back to every tile.
            x0 = 0;
            y0 = 0;
            x1 = tg.tiles_x - 1;
            y1 = tg.tiles_y - 1;
        } else {
            double sx_lo, sx_hi, sy_lo, sy_hi;
            sphere_slope_range(pc.x, pc.z, r3, sx_lo, sx_hi);
            sphere_slope_range(pc.y, pc.z, r3, sy_lo, sy_hi);
            const double u_lo = cam.fx() * sx_lo + cam.cx();
            const double u_hi = cam.fx() * sx_hi + cam.cx();
            const double v_lo = cam.fy() * sy_lo + cam.cy();
            const double v_hi = cam.fy() * sy_hi + cam.cy();
            x0 = std::max(0, static_cast<int>(std::floor(u_lo / kTile)));
            x1 = std::min(tg.tiles_x - 1, static_cast<int>(std::floor(u_hi / kTile)));
            y0 = std::max(0, static_cast<int>(std::floor(v_lo / kTile)));
            y1 = std::min(tg.tiles_y - 1, static_cast<int>(std::floor(v_hi / kTile)));
        }
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx)
                tg.lists[static_cast<size_t>(ty) * tg.tiles_x + tx].push_back(s);
    }
    return tg;
}

/// Solves [tu tv -dir] (a, b, t)^T = origin - center.
bool intersect(const Surfel& sf, const core::Vec3d& origin, const core::Vec3d& dir,
               double& a, double& b, double& t) {
    core::Mat3d m;
    m(0, 0) = sf.tu.x;
    m(1, 0) = sf.tu.y;
    m(2, 0) = sf.tu.z;
    m(0, 1) = sf.tv.x;
    m(1, 1) = sf.tv.y;
    m(2, 1) = sf.tv.z;
    m(0, 2) = -dir.x;
    m(1, 2) = -dir.y;
    m(2, 2) = -dir.z;
    core::Vec3d x;
    if (!core::solve3x3(m, origin - sf.center, x, 1e-300)) return false;
    a = x.x;
    b = x.y;
    t = x.z;
    return true;
}

}  // namespace

void RenderGrad::resize(const RenderOutput& r) {
    const size_t n = static_cast<size_t>(r.width) * r.height;
    d_color.assign(n, core::Vec3d{});
    d_alpha.assign(n, 0.0);
    d_depth.assign(n, 0.0);
    d_normal.assign(n, core::Vec3d{});
    d_frag_omega.assign(r.fragments.size(), 0.0);
    d_frag_z.assign(r.fragments.size(), 0.0);
    d_frag_normal.assign(r.fragments.size(), core::Vec3d{});
}

RenderOutput rasterize(std::span<const Surfel> surfels, const Camera& cam,
                       const core::Vec3d& background, int loss_fragments) {
    RenderOutput out;
    out.width = cam.width();
    out.height = cam.height();
    out.background = background;
    out.loss_fragments = loss_fragments;
    const size_t n_px = static_cast<size_t>(out.width) * out.height;
    out.color.assign(n_px, background);
    out.alpha.assign(n_px, 0.0);
    out.depth.assign(n_px, 0.0);
    out.normal.assign(n_px, core::Vec3d{});

    const TileGrid tg = build_tiles(surfels, cam);
    const core::Vec3d origin = cam.center();

    std::vector<std::vector<RasterFragment>> per_pixel(n_px);
    const size_t n_tiles = tg.lists.size();
    core::parallel_chunks(n_tiles, std::min<size_t>(n_tiles, 64), [&](size_t, size_t tb, size_t te) {
        for (size_t tile = tb; tile < te; ++tile) {
            const auto& cand = tg.lists[tile];
            if (cand.empty()) continue;
            const int tx = static_cast<int>(tile % tg.tiles_x);
            const int ty = static_cast<int>(tile / tg.tiles_x);
            const int x_end = std::min(out.width, (tx + 1) * kTile);
            const int y_end = std::min(out.height, (ty + 1) * kTile);
            for (int y = ty * kTile; y < y_end; ++y)
                for (int x = tx * kTile; x < x_end; ++x) {
                    const core::Vec3d dir = cam.pixel_ray_dir(x + 0.5, y + 0.5);
                    auto& frags = per_pixel[out.pixel(x, y)];
                    for (int s : cand) {
                        double a, b, t;
                        if (!intersect(surfels[s], origin, dir, a, b, t)) continue;
                        if (t <= kNear) continue;
                        const double r2 = a * a + b * b;
                        if (r2 > kCutoffSq) continue;
                        RasterFragment f;
                        f.surfel = s;
                        f.a = a;
                        f.b = b;
                        f.t = t;
                        f.g = std::exp(-0.5 * r2);
                        f.alpha = surfels[s].opacity * f.g;
                        frags.push_back(f);
                    }
                    // Depth order; exact ties composite the dominant
                    // Gaussian first, then break by index for bit-stability.
                    std::sort(frags.begin(), frags.end(),
                              [](const RasterFragment& l, const RasterFragment& r) {
                                  if (l.t != r.t) return l.t < r.t;
                                  if (l.g != r.g) return l.g > r.g;
                                  return l.surfel < r.surfel;
                              });
                    double trans = 1.0;
                    core::Vec3d col{}, nrm{};
                    double asum = 0.0, zsum = 0.0;
                    for (auto& f : frags) {
                        f.omega = f.alpha * trans;
                        trans *= (1.0 - f.alpha);
                        col += surfels[f.surfel].color * f.omega;
                        nrm += surfels[f.surfel].normal * f.omega;
                        asum += f.omega;
                        zsum += f.t * f.omega;
                    }
                    const size_t px = out.pixel(x, y);
                    out.color[px] = col + background * (1.0 - asum);
                    out.alpha[px] = asum;
                    out.depth[px] = zsum / std::max(asum, kDepthEps);
                    out.normal[px] = nrm.norm() > 0 ? nrm.normalized() : core::Vec3d{};
                }
        }
    });

    out.frag_begin.assign(n_px + 1, 0);
    for (size_t p = 0; p < n_px; ++p)
        out.frag_begin[p + 1] = out.frag_begin[p] + static_cast<uint32_t>(per_pixel[p].size());
    out.fragments.resize(out.frag_begin[n_px]);
    for (size_t p = 0; p < n_px; ++p)
        std::copy(per_pixel[p].begin(), per_pixel[p].end(),
                  out.fragments.begin() + out.frag_begin[p]);
    return out;
}

void rasterize_backward(std::span<const Surfel> surfels, const Camera& cam,
                        const RenderOutput& render, const RenderGrad& up, SurfelGrads& grads) {
    const core::Vec3d origin = cam.center();
    const size_t n_px = static_cast<size_t>(render.width) * render.height;
    std::vector<double> trans;   // T_{k-1} per fragment of the pixel
    std::vector<double> gamma;   // dL/d(omega_k)
    std::vector<core::Vec3d> dnk;

    for (size_t px = 0; px < n_px; ++px) {
        const uint32_t fb = render.frag_begin[px], fe = render.frag_begin[px + 1];
        if (fb == fe) continue;
        const int nf = static_cast<int>(fe - fb);
        const int nk = render.loss_count(px);
        trans.assign(nf, 1.0);
        gamma.assign(nf, 0.0);
        dnk.assign(nf, core::Vec3d{});

        const double asum = render.alpha[px];
        const double denom = std::max(asum, kDepthEps);
        double zsum = 0.0;
        core::Vec3d nsum{};
        {
            double t_run = 1.0;
            for (int k = 0; k < nf; ++k) {
                const auto& f = render.fragments[fb + k];
                trans[k] = t_run;
                t_run *= (1.0 - f.alpha);
                zsum += f.t * f.omega;
                nsum += surfels[f.surfel].normal * f.omega;
            }
        }

        // Per-fragment omega/z/normal gradients from the dense heads.
        const core::Vec3d dcol = up.d_color.empty() ? core::Vec3d{} : up.d_color[px];
        const double dalpha = up.d_alpha.empty() ? 0.0 : up.d_alpha[px];
        const double ddepth = up.d_depth.empty() ? 0.0 : up.d_depth[px];
        const core::Vec3d dnormal = up.d_normal.empty() ? core::Vec3d{} : up.d_normal[px];

        core::Vec3d d_nsum{};
        if (dnormal.x != 0 || dnormal.y != 0 || dnormal.z != 0) {
            const double len = nsum.norm();
            if (len > 0)
                d_nsum = (dnormal - nsum * (nsum.dot(dnormal) / (len * len))) * (1.0 / len);
        }
        const bool depth_head = ddepth != 0.0;
        const double dz_scale = depth_head ? ddepth / denom : 0.0;

        for (int k = 0; k < nf; ++k) {
            const auto& f = render.fragments[fb + k];
            const Surfel& sf = surfels[f.surfel];
            double g = dcol.dot(sf.color - render.background) + dalpha;
            if (depth_head) {
                // depth = zsum / max(asum, eps)
                g += asum > kDepthEps ? ddepth * (f.t - render.depth[px]) / denom
                                      : ddepth * f.t / kDepthEps;
            }
            g += d_nsum.dot(sf.normal);
            dnk[k] += d_nsum * f.omega;
            if (k < nk) {
                if (!up.d_frag_omega.empty()) g += up.d_frag_omega[fb + k];
                if (!up.d_frag_normal.empty()) dnk[k] += up.d_frag_normal[fb + k];
            }
            gamma[k] = g;
        }

        // Suffix recursion: d(alpha_j) = T_{j-1} (gamma_j - R_j) with
        // R_j = alpha_{j+1} gamma_{j+1} + (1 - alpha_{j+1}) R_{j+1}; this
        // form never divides by (1 - alpha).
        double r_suffix = 0.0;
        for (int j = nf - 1; j >= 0; --j) {
            const auto& f = render.fragments[fb + j];
            const Surfel& sf = surfels[f.surfel];
            const double d_alpha_j = trans[j] * (gamma[j] - r_suffix);
            r_suffix = f.alpha * gamma[j] + (1.0 - f.alpha) * r_suffix;

            // Color gradient: every fragment composites.
            grads.d_color[f.surfel] += dcol * f.omega;

            // alpha = opacity * g.
            const double d_op = d_alpha_j * f.g;
            const double d_g = d_alpha_j * sf.opacity;
            grads.d_opacity[f.surfel] += d_op;

            // z gradient: depth head plus the distortion-style fragment head.
            double d_t = f.omega * dz_scale;
            if (j < nk && !up.d_frag_z.empty()) d_t += up.d_frag_z[fb + j];

            // g = exp(-(a^2+b^2)/2).
            const double d_a = -f.a * f.g * d_g;
            const double d_b = -f.b * f.g * d_g;

            if (d_a != 0 || d_b != 0 || d_t != 0) {
                // Adjoint of the 3x3 solve.
                const int x = static_cast<int>(px) % render.width;
                const int y = static_cast<int>(px) / render.width;
                const core::Vec3d dir = cam.pixel_ray_dir(x + 0.5, y + 0.5);
                core::Mat3d m;
                m(0, 0) = sf.tu.x;
                m(1, 0) = sf.tu.y;
                m(2, 0) = sf.tu.z;
                m(0, 1) = sf.tv.x;
                m(1, 1) = sf.tv.y;
                m(2, 1) = sf.tv.z;
                m(0, 2) = -dir.x;
                m(1, 2) = -dir.y;
                m(2, 2) = -dir.z;
                core::Vec3d u;
                if (core::solve3x3(m.transposed(), core::Vec3d{d_a, d_b, d_t}, u, 1e-300)) {
                    grads.d_center[f.surfel] -= u;
                    grads.d_tu[f.surfel] -= u * f.a;
                    grads.d_tv[f.surfel] -= u * f.b;
                }
            }

            // Fragment normal gradient through sign * normalize(tu x tv).
            const core::Vec3d dn = dnk[j];
            if (dn.x != 0 || dn.y != 0 || dn.z != 0) {
                const core::Vec3d c = sf.tu.cross(sf.tv);
                const double len = c.norm();
                if (len > 0) {
                    const core::Vec3d dc =
                        (dn - c * (c.dot(dn) / (len * len))) * (sf.orient_sign / len);
                    grads.d_tu[f.surfel] += sf.tv.cross(dc);
                    grads.d_tv[f.surfel] += dc.cross(sf.tu);
                }
            }
        }
    }
}

void write_fragment_dump(std::span<const Surfel> surfels, const RenderOutput& render,
                         const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    const size_t n_px = static_cast<size_t>(render.width) * render.height;
    for (size_t px = 0; px < n_px; ++px) {
        const uint32_t n = static_cast<uint32_t>(render.loss_count(px));
        out.write(reinterpret_cast<const char*>(&n), 4);
        for (uint32_t k = 0; k < n; ++k) {
            const auto& f = render.fragments[render.frag_begin[px] + k];
            const auto& nrm = surfels[f.surfel].normal;
            const float vals[5] = {static_cast<float>(f.omega), static_cast<float>(f.t),
                                   static_cast<float>(nrm.x), static_cast<float>(nrm.y),
                                   static_cast<float>(nrm.z)};
            out.write(reinterpret_cast<const char*>(vals), 20);
        }
    }
    CHARTSURF_CHECK_MSG(out.good(), "short write to " << path);
}

}  // namespace chartsurf::render
