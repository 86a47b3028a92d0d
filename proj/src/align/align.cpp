// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/align/align.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "chartsurf/optim/adam.hpp"

namespace chartsurf::align {

AlignEval evaluate_alignment_losses(AtlasState& atlas, const std::vector<FitObs>& obs,
                                    const AlignLossWeights& weights, bool with_grad,
                                    bool symmetric_align, uint64_t align_seed,
                                    double pair_fraction,
                                    const std::vector<SamplingPlan>* cached_plans) {
    const int n = atlas.n_charts();
    std::vector<SamplingPlan> own_plans;
    if (cached_plans == nullptr) {
        own_plans.resize(n);
        for (int i = 0; i < n; ++i)
            own_plans[i] = atlas::plan_for_grid(atlas.charts[i], atlas.models[i]);
    }
    const std::vector<SamplingPlan>& plans = cached_plans != nullptr ? *cached_plans : own_plans;
    static thread_local std::vector<DeformForward> fwd;
    fwd.resize(n);
    for (int i = 0; i < n; ++i) deform_forward(atlas.models[i], atlas.store, plans[i], fwd[i]);

    static thread_local std::vector<std::vector<Vec3d>> d_points;
    d_points.resize(n);
    for (int i = 0; i < n; ++i) d_points[i].assign(plans[i].size(), Vec3d{});

    AlignEval ev;
    ev.fit = fitting_loss(atlas, obs, weights.alpha, with_grad);

    double struct_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto geom = atlas::compute_grid_geometry(fwd[i].points, atlas.charts[i].valid,
                                                       atlas.charts[i].w, atlas.charts[i].h,
                                                       atlas.charts[i].camera.center());
        struct_sum += structure_loss(
            atlas.charts[i], geom, fwd[i].points,
            with_grad ? std::span<Vec3d>(d_points[i]) : std::span<Vec3d>{},
            weights.lambda_struct / n);
    }
    ev.structure = struct_sum / n;

    MutualAlignOptions mopt;
    mopt.tau = weights.tau;
    mopt.sample_fraction = pair_fraction;
    mopt.seed = align_seed;
    mopt.symmetric = symmetric_align;
    std::vector<std::vector<Vec3d>> d_align(n);
    for (int i = 0; i < n; ++i) d_align[i].assign(plans[i].size(), Vec3d{});
    ev.align = mutual_alignment_loss(atlas, fwd, plans, mopt, with_grad ? &d_align : nullptr);

    if (with_grad) {
        for (int i = 0; i < n; ++i) {
            for (size_t p = 0; p < d_points[i].size(); ++p)
                d_points[i][p] += d_align[i][p] * weights.lambda_align;
            deform_backward(atlas.models[i], atlas.store, plans[i], fwd[i], d_points[i]);
        }
    }
    ev.total = ev.fit + weights.lambda_struct * ev.structure + weights.lambda_align * ev.align;
    return ev;
}

AlignReport run_alignment(AtlasState& atlas, const scene::SceneBundle& bundle,
                          const AlignConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto obs = build_fit_observations(atlas, bundle);
    std::vector<SamplingPlan> plans(atlas.n_charts());
    for (int i = 0; i < atlas.n_charts(); ++i)
        plans[i] = atlas::plan_for_grid(atlas.charts[i], atlas.models[i]);
    optim::Adam adam;
    AlignReport report;
    report.records.reserve(cfg.iters);

    for (int it = 0; it < cfg.iters; ++it) {
        atlas.store.zero_grads();
        const AlignEval ev = evaluate_alignment_losses(
            atlas, obs, cfg.weights, /*with_grad=*/true, /*symmetric_align=*/false,
            cfg.seed * 1000003 + static_cast<uint64_t>(it), cfg.pair_sample_fraction, &plans);
        if (!std::isfinite(ev.total)) {
            std::string term = "total";
            if (!std::isfinite(ev.fit)) term = "fit";
            else if (!std::isfinite(ev.structure)) term = "structure";
            else if (!std::isfinite(ev.align)) term = "align";
            throw Error("alignment aborted: non-finite " + term + " loss at iteration " +
                        std::to_string(it));
        }
        atlas.store.clip_grad_norm(cfg.grad_clip);
        adam.step(atlas.store);
        report.records.push_back({it, ev.fit, ev.structure, ev.align, ev.total});
    }

    // Confidence summary over valid pixels of all charts.
    std::vector<double> confs;
    for (int i = 0; i < atlas.n_charts(); ++i) {
        const auto logits = atlas.store.values(atlas.models[i].g_conf);
        for (size_t p = 0; p < logits.size(); ++p)
            if (atlas.charts[i].valid[p] != 0) confs.push_back(1.0 + std::exp(logits[p]));
    }
    if (!confs.empty()) {
        double s = 0;
        for (double c : confs) s += c;
        report.conf_mean = s / confs.size();
        std::nth_element(confs.begin(), confs.begin() + confs.size() / 2, confs.end());
        report.conf_median = confs[confs.size() / 2];
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace chartsurf::align
