// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/align/losses.hpp"

#include <cmath>

namespace chartsurf::align {

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<FitObs> build_fit_observations(const AtlasState& atlas,
                                           const scene::SceneBundle& bundle) {
    std::vector<FitObs> out(atlas.charts.size());
    for (int i = 0; i < atlas.n_charts(); ++i) {
        const double iw = bundle.cameras[i].width(), ih = bundle.cameras[i].height();
        std::vector<core::Vec2d> uvs;
        std::vector<Vec3d> targets;
        for (const auto& p : bundle.sfm_points)
            for (const auto& o : p.observations)
                if (o.view == atlas.charts[i].view) {
                    uvs.push_back({o.u / iw, o.v / ih});
                    targets.push_back(p.position);
                }
        FitObs fo;
        fo.plan = atlas::plan_for_uvs(atlas.charts[i], atlas.models[i], uvs);
        // Observations landing on masked chart pixels are dropped (ok=0 in
        // the plan); keep targets aligned by index.
        fo.targets = std::move(targets);
        fo.conf_taps.resize(uvs.size());
        for (size_t k = 0; k < uvs.size(); ++k)
            atlas::confidence_at(atlas.models[i], atlas.store, atlas.charts[i], uvs[k],
                                 &fo.conf_taps[k]);
        out[i] = std::move(fo);
    }
    return out;
}

double fitting_loss(AtlasState& atlas, const std::vector<FitObs>& obs, double alpha,
                    bool with_grad) {
    const int n = atlas.n_charts();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& fo = obs[i];
        const auto& model = atlas.models[i];
        const auto& chart = atlas.charts[i];

        DeformForward fwd;
        deform_forward(model, atlas.store, fo.plan, fwd);
        std::vector<Vec3d> d_points(fo.plan.size(), Vec3d{});
        const auto logits = atlas.store.values(model.g_conf);

        for (size_t k = 0; k < fo.plan.size(); ++k) {
            if (fo.plan.ok[k] == 0) continue;
            const Vec3d r = fwd.points[k] - fo.targets[k];
            const double l1 = r.l1_norm();
            const auto& tap = fo.conf_taps[k];
            const double conf = 1.0 + tap.w00 * std::exp(logits[tap.i00]) +
                                tap.w10 * std::exp(logits[tap.i10]) +
                                tap.w01 * std::exp(logits[tap.i01]) +
                                tap.w11 * std::exp(logits[tap.i11]);
            total += conf * l1 / n;
            if (with_grad) {
                d_points[k] = Vec3d{sign_of(r.x), sign_of(r.y), sign_of(r.z)} * (conf / n);
                atlas::confidence_backward(model, atlas.store, tap, l1 / n);
            }
        }
        if (with_grad) deform_backward(model, atlas.store, fo.plan, fwd, d_points);

        // Confidence regularizer: -alpha * mean over valid pixels of log C.
        size_t n_valid = 0;
        for (auto v : chart.valid) n_valid += v;
        if (n_valid == 0) continue;
        double reg = 0.0;
        auto g_conf = atlas.store.grads(model.g_conf);
        for (size_t p = 0; p < logits.size(); ++p) {
            if (chart.valid[p] == 0) continue;
            const double e = std::exp(logits[p]);
            reg += std::log(1.0 + e);
            if (with_grad) g_conf[p] += -alpha / static_cast<double>(n_valid) * e / (1.0 + e);
        }
        total += -alpha * reg / static_cast<double>(n_valid);
    }
    return total;
}

double structure_loss(const atlas::Chart& chart, const atlas::GridGeometry& geom,
                      std::span<const Vec3d> points, std::span<Vec3d> d_points, double scale,
                      std::span<const double> pixel_weights) {
    const size_t n = chart.initial_points.size();
    double wsum = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (chart.valid[i] != 0 && geom.flags[i] == 0 && chart.ref_flags[i] == 0)
            wsum += pixel_weights.empty() ? 1.0 : pixel_weights[i];
    if (wsum <= 0.0) return 0.0;

    double normal_term = 0.0, curv_term = 0.0;
    std::vector<Vec3d> d_normals(n, Vec3d{});
    std::vector<double> d_curv(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        if (chart.valid[i] == 0 || geom.flags[i] != 0 || chart.ref_flags[i] != 0) continue;
        const double w = pixel_weights.empty() ? 1.0 : pixel_weights[i];
        normal_term += w * (1.0 - geom.normals[i].dot(chart.ref_normals[i]));
        const double dm = geom.curvature[i] - chart.ref_curvature[i];
        curv_term += w * std::fabs(dm);
        if (!d_points.empty()) {
            d_normals[i] = chart.ref_normals[i] * (-w * scale / wsum);
            d_curv[i] = 0.25 * w * scale * sign_of(dm) / wsum;
        }
    }
    const double value = normal_term / wsum + 0.25 * curv_term / wsum;
    if (!d_points.empty())
        grid_geometry_backward(geom, points, chart.valid, d_normals, d_curv, d_points);
    return value;
}

double mutual_alignment_loss(AtlasState& atlas, const std::vector<DeformForward>& fwd,
                             const std::vector<SamplingPlan>& plans,
                             const MutualAlignOptions& opt,
                             std::vector<std::vector<Vec3d>>* d_points) {
    const int n = atlas.n_charts();
    if (n <= 1) return 0.0;

    struct Sample {
        int i, px, j;
    };
    std::vector<Sample> contributing;
    double sum = 0.0;
    size_t count = 0;
    core::Rng rng(opt.seed ^ 0xA116);

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const atlas::Chart& cj = atlas.charts[j];
            const auto& pts_i = fwd[i].points;
            for (size_t px = 0; px < pts_i.size(); ++px) {
                if (plans[i].ok[px] == 0) continue;
                if (opt.sample_fraction < 1.0 && rng.uniform() >= opt.sample_fraction) continue;
                const auto pr = core::project_point(cj.camera, pts_i[px]);
                if (pr.behind) continue;
                const double gx = pr.u - 0.5, gy = pr.v - 0.5;
                if (gx < 0.0 || gy < 0.0 || gx > cj.w - 1.0 || gy > cj.h - 1.0) continue;
                const int x0 = std::min(static_cast<int>(gx), cj.w - 2);
                const int y0 = std::min(static_cast<int>(gy), cj.h - 2);
                const size_t t00 = cj.idx(x0, y0), t10 = cj.idx(x0 + 1, y0);
                const size_t t01 = cj.idx(x0, y0 + 1), t11 = cj.idx(x0 + 1, y0 + 1);
                if (cj.valid[t00] == 0 || cj.valid[t10] == 0 || cj.valid[t01] == 0 ||
                    cj.valid[t11] == 0)
                    continue;
                const double fx = gx - x0, fy = gy - y0;
                const Vec3d q = fwd[j].points[t00] * ((1 - fx) * (1 - fy)) +
                                fwd[j].points[t10] * (fx * (1 - fy)) +
                                fwd[j].points[t01] * ((1 - fx) * fy) +
                                fwd[j].points[t11] * (fx * fy);
                const double l1 = (pts_i[px] - q).l1_norm();
                sum += std::min(l1, opt.tau);
                ++count;
                if (d_points != nullptr && l1 < opt.tau)
                    contributing.push_back({i, static_cast<int>(px), j});
            }
        }
    }
    if (count == 0) return 0.0;
    const double value = sum / static_cast<double>(count);

    if (d_points != nullptr) {
        const double inv = 1.0 / static_cast<double>(count);
        for (const auto& s : contributing) {
            const atlas::Chart& cj = atlas.charts[s.j];
            const Vec3d pi = fwd[s.i].points[s.px];
            const auto pr = core::project_point(cj.camera, pi);
            const double gx = pr.u - 0.5, gy = pr.v - 0.5;
            const int x0 = std::min(static_cast<int>(gx), cj.w - 2);
            const int y0 = std::min(static_cast<int>(gy), cj.h - 2);
            const size_t t00 = cj.idx(x0, y0), t10 = cj.idx(x0 + 1, y0);
            const size_t t01 = cj.idx(x0, y0 + 1), t11 = cj.idx(x0 + 1, y0 + 1);
            const double fx = gx - x0, fy = gy - y0;
            const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
            const double w01 = (1 - fx) * fy, w11 = fx * fy;
            const Vec3d q = fwd[s.j].points[t00] * w00 + fwd[s.j].points[t10] * w10 +
                            fwd[s.j].points[t01] * w01 + fwd[s.j].points[t11] * w11;
            const Vec3d r = pi - q;
            const Vec3d sgn{sign_of(r.x) * inv, sign_of(r.y) * inv, sign_of(r.z) * inv};
            (*d_points)[s.i][s.px] += sgn;
            if (!opt.symmetric) continue;

            // Gradients into the target chart's grid points...
            (*d_points)[s.j][t00] -= sgn * w00;
            (*d_points)[s.j][t10] -= sgn * w10;
            (*d_points)[s.j][t01] -= sgn * w01;
            (*d_points)[s.j][t11] -= sgn * w11;
            // ...and through the projected pixel coordinate.
            const Vec3d dq_dgx = (fwd[s.j].points[t10] - fwd[s.j].points[t00]) * (1 - fy) +
                                 (fwd[s.j].points[t11] - fwd[s.j].points[t01]) * fy;
            const Vec3d dq_dgy = (fwd[s.j].points[t01] - fwd[s.j].points[t00]) * (1 - fx) +
                                 (fwd[s.j].points[t11] - fwd[s.j].points[t10]) * fx;
            const double dgx = -sgn.dot(dq_dgx);
            const double dgy = -sgn.dot(dq_dgy);
            const core::Mat3d& rot = cj.camera.rotation();
            const core::Mat3d& k = cj.camera.intrinsics();
            const Vec3d pc = cj.camera.to_camera(pi);
            const Vec3d r0 = rot.row(0), r1 = rot.row(1), r2 = rot.row(2);
            const Vec3d du_dp =
                (r0 * k(0, 0) + r1 * k(0, 1)) * (1.0 / pc.z) -
                r2 * ((k(0, 0) * pc.x + k(0, 1) * pc.y) / (pc.z * pc.z));
            const Vec3d dv_dp = r1 * (k(1, 1) / pc.z) - r2 * (k(1, 1) * pc.y / (pc.z * pc.z));
            (*d_points)[s.i][s.px] += du_dp * dgx + dv_dp * dgy;
        }
    }
    return value;
}

}  // namespace chartsurf::align
