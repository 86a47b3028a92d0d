// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/render/losses.hpp"

#include <cmath>

#include "chartsurf/render/ssim.hpp"

namespace chartsurf::render {

double photometric_loss(const RenderOutput& render, std::span<const core::Vec3f> target,
                        double lambda_dssim, RenderGrad* up) {
    const size_t n = static_cast<size_t>(render.width) * render.height;
    CHARTSURF_CHECK_MSG(target.size() == n, "photometric: target size mismatch");
    std::vector<core::Vec3d> tgt(n);
    for (size_t i = 0; i < n; ++i) tgt[i] = target[i].to_double();

    double l1 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const core::Vec3d r = render.color[i] - tgt[i];
        l1 += r.l1_norm();
        if (up != nullptr) {
            const double s = (1.0 - lambda_dssim) / (3.0 * static_cast<double>(n));
            up->d_color[i] += core::Vec3d{r.x > 0 ? s : (r.x < 0 ? -s : 0.0),
                                          r.y > 0 ? s : (r.y < 0 ? -s : 0.0),
                                          r.z > 0 ? s : (r.z < 0 ? -s : 0.0)};
        }
    }
    l1 /= 3.0 * static_cast<double>(n);

    std::vector<core::Vec3d> d_ssim;
    const double s = ssim(render.color, tgt, render.width, render.height,
                          up != nullptr ? &d_ssim : nullptr);
    if (up != nullptr) {
        // d((1 - ssim)/2)/d(color) = -d(ssim)/2
        for (size_t i = 0; i < n; ++i) up->d_color[i] += d_ssim[i] * (-0.5 * lambda_dssim);
    }
    return (1.0 - lambda_dssim) * l1 + lambda_dssim * 0.5 * (1.0 - s);
}

double distortion_loss(const RenderOutput& render, RenderGrad* up, double grad_scale) {
    const size_t n = static_cast<size_t>(render.width) * render.height;
    double total = 0.0;
    for (size_t px = 0; px < n; ++px) {
        const uint32_t fb = render.frag_begin[px];
        const int nk = render.loss_count(px);
        if (nk < 2) continue;
        // Fragments are depth-sorted: sum_{i<j} w_i w_j (z_j - z_i), doubled
        // for ordered pairs. Prefix sums give O(K).
        double sw = 0.0, swz = 0.0, pix = 0.0;
        for (int k = 0; k < nk; ++k) {
            const auto& f = render.fragments[fb + k];
            pix += f.omega * (f.t * sw - swz);
            sw += f.omega;
            swz += f.omega * f.t;
        }
        total += 2.0 * pix;
        if (up != nullptr) {
            const double scale = grad_scale * 2.0 / static_cast<double>(n);
            std::vector<double> pw(nk), pwz(nk);  // prefix sums excluding k
            double aw = 0, awz = 0;
            for (int k = 0; k < nk; ++k) {
                pw[k] = aw;
                pwz[k] = awz;
                const auto& f = render.fragments[fb + k];
                aw += f.omega;
                awz += f.omega * f.t;
            }
            double sw_suf = 0, swz_suf = 0;
            for (int k = nk - 1; k >= 0; --k) {
                const auto& f = render.fragments[fb + k];
                // dL/dw_k = z_k * pw - pwz + (swz_suf - z_k * sw_suf)
                up->d_frag_omega[fb + k] +=
                    scale * (f.t * pw[k] - pwz[k] + swz_suf - f.t * sw_suf);
                // dL/dz_k = w_k * (pw - sw_suf)
                up->d_frag_z[fb + k] += scale * f.omega * (pw[k] - sw_suf);
                sw_suf += f.omega;
                swz_suf += f.omega * f.t;
            }
        }
    }
    return total / static_cast<double>(n);
}

NormalPrior depth_normal_prior(const RenderOutput& render, const core::Camera& camera) {
    const int w = render.width, h = render.height;
    const size_t n = static_cast<size_t>(w) * h;
    NormalPrior prior;
    prior.active.assign(n, 0);
    prior.np.assign(n, core::Vec3d{});

    std::vector<core::Vec3d> pts(n);
    std::vector<uint8_t> have(n, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = render.pixel(x, y);
            if (render.alpha[i] < 0.5 || render.depth[i] <= 0.0) continue;
            pts[i] = core::backproject_pixel(camera, x + 0.5, y + 0.5, render.depth[i]);
            have[i] = 1;
        }
    const core::Vec3d cam_center = camera.center();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = render.pixel(x, y);
            if (have[i] == 0) continue;
            const auto pick = [&](int xa, int ya, int xb, int yb, core::Vec3d& d) {
                if (xa < 0 || ya < 0 || xb >= w || yb >= h) return false;
                const size_t ia = render.pixel(xa, ya), ib = render.pixel(xb, yb);
                if (have[ia] == 0 || have[ib] == 0) return false;
                d = pts[ib] - pts[ia];
                return true;
            };
            core::Vec3d du, dv;
            if (!pick(x - 1, y, x + 1, y, du) || !pick(x, y - 1, x, y + 1, dv)) continue;
            core::Vec3d np = du.cross(dv);
            const double len = np.norm();
            if (len <= 1e-300) continue;
            np = np / len;
            if (np.dot(cam_center - pts[i]) < 0.0) np = -np;
            prior.active[i] = 1;
            prior.np[i] = np;
        }
    return prior;
}

double normal_consistency_loss(const RenderOutput& render, const core::Camera& camera,
                               std::span<const Surfel> surfels, RenderGrad* up,
                               double grad_scale, const NormalPrior* prior) {
    NormalPrior own;
    if (prior == nullptr) {
        own = depth_normal_prior(render, camera);
        prior = &own;
    }
    const size_t n = static_cast<size_t>(render.width) * render.height;
    double total = 0.0;
    size_t contributing = 0;
    for (size_t i = 0; i < n; ++i)
        if (prior->active[i] != 0) ++contributing;
    if (contributing == 0) return 0.0;

    for (size_t i = 0; i < n; ++i) {
        if (prior->active[i] == 0) continue;
        const core::Vec3d np = prior->np[i];
        const uint32_t fb = render.frag_begin[i];
        const int nk = render.loss_count(i);
        double pix = 0.0;
        for (int k = 0; k < nk; ++k) {
            const auto& f = render.fragments[fb + k];
            pix += f.omega * (1.0 - surfels[f.surfel].normal.dot(np));
        }
        total += pix;
        if (up != nullptr) {
            const double scale = grad_scale / static_cast<double>(contributing);
            for (int k = 0; k < nk; ++k) {
                const auto& f = render.fragments[fb + k];
                up->d_frag_omega[fb + k] +=
                    scale * (1.0 - surfels[f.surfel].normal.dot(np));
                up->d_frag_normal[fb + k] += np * (-scale * f.omega);
            }
        }
    }
    return total / static_cast<double>(contributing);
}

}  // namespace chartsurf::render
