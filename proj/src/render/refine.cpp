// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/render/refine.hpp"

#include <chrono>
#include <cmath>

#include "chartsurf/align/losses.hpp"
#include "chartsurf/optim/adam.hpp"

namespace chartsurf::render {

namespace {

using atlas::DeformForward;
using atlas::SamplingPlan;

/// Per-chart confidence weights C/(1+C), frozen at stage entry.
std::vector<std::vector<double>> confidence_weights(const AtlasState& atlas) {
    std::vector<std::vector<double>> out(atlas.charts.size());
    for (int c = 0; c < atlas.n_charts(); ++c) {
        const auto logits = atlas.store.values(atlas.models[c].g_conf);
        out[c].resize(logits.size());
        for (size_t i = 0; i < logits.size(); ++i) {
            const double conf = 1.0 + std::exp(logits[i]);
            out[c][i] = conf / (1.0 + conf);
        }
    }
    return out;
}

void ensure_refinement_ready(AtlasState& atlas, const scene::SceneBundle& bundle,
                             const RefineConfig& cfg) {
    bool missing_tex = false;
    for (const auto& t : atlas.textures) missing_tex |= !t.present;
    if (missing_tex)
        atlas::add_textures(atlas, bundle, cfg.opacity_logit_init, cfg.lr_color, cfg.lr_opacity);
    core::Rng rng(cfg.seed ^ 0xBAC0ULL);
    for (int c = 0; c < atlas.n_charts(); ++c)
        if (atlas.models[c].mode != atlas::DeformModel::Mode::kFree) {
            core::Rng crng = rng.fork(static_cast<uint64_t>(c));
            atlas::enter_refinement_mode(atlas.charts[c], atlas.models[c], atlas.store, crng);
        }
    // Stage-2 learning rates (the groups may have been registered earlier
    // with different ones).
    for (const auto& m : atlas.models)
        for (size_t g : {m.g_enc, m.g_z, m.g_w1, m.g_b1, m.g_w2, m.g_b2})
            atlas.store.group(g).lr = cfg.lr_deform;
    for (const auto& t : atlas.textures) {
        if (!t.present) continue;
        atlas.store.group(t.g_color).lr = cfg.lr_color;
        atlas.store.group(t.g_opacity).lr = cfg.lr_opacity;
    }
}

}  // namespace

RenderOutput render_scene(AtlasState& atlas, const core::Camera& camera,
                          const core::Vec3d& background, const FreeSurfelModel* free_model) {
    SurfelSet set;
    if (free_model != nullptr) {
        set = free_surfels_forward(atlas, *free_model, atlas.store);
    } else {
        std::vector<DeformForward> fwd(atlas.n_charts());
        for (int c = 0; c < atlas.n_charts(); ++c) {
            const auto plan = atlas::plan_for_grid(atlas.charts[c], atlas.models[c]);
            deform_forward(atlas.models[c], atlas.store, plan, fwd[c]);
        }
        set = instantiate_surfels(atlas, fwd);
    }
    return rasterize(set.surfels, camera, background);
}

RefineReport run_refinement(AtlasState& atlas, const scene::SceneBundle& bundle,
                            const RefineConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ensure_refinement_ready(atlas, bundle, cfg);
    const auto conf_w = confidence_weights(atlas);

    std::vector<SamplingPlan> plans(atlas.n_charts());
    for (int c = 0; c < atlas.n_charts(); ++c)
        plans[c] = atlas::plan_for_grid(atlas.charts[c], atlas.models[c]);

    optim::Adam adam;
    core::Rng view_rng(cfg.seed ^ 0x5EED);
    RefineReport report;
    report.records.reserve(cfg.iters);

    for (int it = 0; it < cfg.iters; ++it) {
        const int v = static_cast<int>(view_rng.below(bundle.n_views()));
        atlas.store.zero_grads();

        std::vector<DeformForward> fwd(atlas.n_charts());
        for (int c = 0; c < atlas.n_charts(); ++c)
            deform_forward(atlas.models[c], atlas.store, plans[c], fwd[c]);
        SurfelSet set = instantiate_surfels(atlas, fwd);
        RenderOutput render = rasterize(set.surfels, bundle.cameras[v], cfg.background);
        RenderGrad up;
        up.resize(render);

        RefineRecord rec;
        rec.iter = it;
        rec.view = v;
        rec.photo = photometric_loss(render, bundle.images[v].data(), cfg.weights.lambda_dssim,
                                     &up);

        // Confidence-weighted structure term on the chart grids.
        std::vector<std::vector<core::Vec3d>> dpsi(atlas.n_charts());
        double struct_sum = 0.0;
        for (int c = 0; c < atlas.n_charts(); ++c) {
            dpsi[c].assign(plans[c].size(), core::Vec3d{});
            const auto geom = atlas::compute_grid_geometry(
                fwd[c].points, atlas.charts[c].valid, atlas.charts[c].w, atlas.charts[c].h,
                atlas.charts[c].camera.center());
            struct_sum += align::structure_loss(
                atlas.charts[c], geom, fwd[c].points, dpsi[c],
                cfg.weights.lambda_struct / atlas.n_charts(), conf_w[c]);
        }
        rec.structure = struct_sum / atlas.n_charts();

        const bool scheduled = it >= cfg.weights.schedule_iter;
        if (scheduled) {
            rec.distortion = distortion_loss(render, &up, cfg.weights.lambda_dist);
            rec.normal = normal_consistency_loss(render, bundle.cameras[v], set.surfels, &up,
                                                 cfg.weights.lambda_normal);
        }
        rec.total = rec.photo + cfg.weights.lambda_struct * rec.structure +
                    (scheduled ? cfg.weights.lambda_dist * rec.distortion +
                                     cfg.weights.lambda_normal * rec.normal
                               : 0.0);
        if (!std::isfinite(rec.total)) {
            std::string term = !std::isfinite(rec.photo)        ? "photometric"
                               : !std::isfinite(rec.structure)  ? "structure"
                               : !std::isfinite(rec.distortion) ? "distortion"
                                                                : "normal-consistency";
            throw Error("refinement aborted: non-finite " + term + " loss at iteration " +
                        std::to_string(it));
        }

        SurfelGrads sg;
        sg.resize(set.surfels.size());
        rasterize_backward(set.surfels, bundle.cameras[v], render, up, sg);
        instantiate_backward(atlas, set, sg, dpsi, atlas.store);
        for (int c = 0; c < atlas.n_charts(); ++c)
            deform_backward(atlas.models[c], atlas.store, plans[c], fwd[c], dpsi[c]);

        atlas.store.clip_grad_norm(cfg.grad_clip);
        adam.step(atlas.store);
        report.records.push_back(rec);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

FreeStageResult run_free_gaussian_stage(AtlasState& atlas, const scene::SceneBundle& bundle,
                                        const FreeStageConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    FreeStageResult result;

    // Frozen manifold surfels and cached depth/weight renders per view.
    std::vector<DeformForward> fwd(atlas.n_charts());
    for (int c = 0; c < atlas.n_charts(); ++c) {
        const auto plan = atlas::plan_for_grid(atlas.charts[c], atlas.models[c]);
        deform_forward(atlas.models[c], atlas.store, plan, fwd[c]);
    }
    SurfelSet manifold = instantiate_surfels(atlas, fwd);
    const auto conf_w = confidence_weights(atlas);

    std::vector<std::vector<double>> cached_depth(bundle.n_views());
    std::vector<std::vector<double>> cached_weight(bundle.n_views());
    {
        SurfelSet weighted = manifold;
        for (auto& s : weighted.surfels) {
            const double w = conf_w[s.chart][atlas.charts[s.chart].idx(s.px, s.py)];
            s.color = core::Vec3d{w, w, w};
        }
        for (int v = 0; v < bundle.n_views(); ++v) {
            const RenderOutput depth_render =
                rasterize(manifold.surfels, bundle.cameras[v], core::Vec3d{0, 0, 0});
            const RenderOutput weight_render =
                rasterize(weighted.surfels, bundle.cameras[v], core::Vec3d{0, 0, 0});
            const size_t n = depth_render.depth.size();
            cached_depth[v].assign(n, 0.0);
            cached_weight[v].assign(n, 0.0);
            for (size_t i = 0; i < n; ++i) {
                if (depth_render.alpha[i] < 0.5) continue;
                cached_depth[v][i] = depth_render.depth[i];
                cached_weight[v][i] =
                    weight_render.color[i].x / std::max(weight_render.alpha[i], 1e-8);
            }
        }
    }

    result.model = make_free_surfels(manifold, atlas.store, cfg.lr_free);

    // Surfel-grid structure bookkeeping: sub-chart per chart holding the
    // interior reference maps; the outer ring of the subgrid is downweighted
    // to zero because its stencils differ from the reference's.
    struct SubChart {
        atlas::Chart chart;  // ref maps + valid mask at (w-2)x(h-2)
        std::vector<int> surfel_of;  // subgrid pixel -> surfel index or -1
        std::vector<double> weights;
    };
    std::vector<SubChart> subs(atlas.n_charts());
    for (int c = 0; c < atlas.n_charts(); ++c) {
        const auto& chart = atlas.charts[c];
        SubChart sub;
        sub.chart.view = chart.view;
        sub.chart.w = chart.w - 2;
        sub.chart.h = chart.h - 2;
        sub.chart.camera = chart.camera;
        const size_t n = static_cast<size_t>(sub.chart.w) * sub.chart.h;
        sub.chart.initial_points.assign(n, core::Vec3d{});
        sub.chart.valid.assign(n, 0);
        sub.chart.ref_normals.assign(n, core::Vec3d{});
        sub.chart.ref_curvature.assign(n, 0.0);
        sub.chart.ref_flags.assign(n, 1);
        sub.surfel_of.assign(n, -1);
        sub.weights.assign(n, 0.0);
        for (int s = manifold.chart_begin[c]; s < manifold.chart_begin[c + 1]; ++s) {
            const auto& sf = manifold.surfels[s];
            const size_t i = static_cast<size_t>(sf.py - 1) * sub.chart.w + (sf.px - 1);
            sub.surfel_of[i] = s;
            sub.chart.valid[i] = 1;
            const size_t src = chart.idx(sf.px, sf.py);
            sub.chart.ref_normals[i] = chart.ref_normals[src];
            sub.chart.ref_curvature[i] = chart.ref_curvature[src];
            sub.chart.ref_flags[i] = chart.ref_flags[src];
            const bool ring = sf.px <= 1 || sf.py <= 1 || sf.px >= chart.w - 2 ||
                              sf.py >= chart.h - 2;
            sub.weights[i] = ring ? 0.0 : 1.0;
        }
        subs[c] = std::move(sub);
    }

    optim::Adam adam;
    core::Rng view_rng(cfg.seed ^ 0xF4EE);
    result.report.records.reserve(cfg.iters);

    for (int it = 0; it < cfg.iters; ++it) {
        const int v = static_cast<int>(view_rng.below(bundle.n_views()));
        atlas.store.zero_grads();
        SurfelSet set = free_surfels_forward(atlas, result.model, atlas.store);
        RenderOutput render = rasterize(set.surfels, bundle.cameras[v], cfg.background);
        RenderGrad up;
        up.resize(render);

        RefineRecord rec;
        rec.iter = it;
        rec.view = v;
        rec.photo = photometric_loss(render, bundle.images[v].data(), cfg.weights.lambda_dssim,
                                     &up);
        rec.distortion = distortion_loss(render, &up, cfg.weights.lambda_dist);
        rec.normal = normal_consistency_loss(render, bundle.cameras[v], set.surfels, &up,
                                             cfg.weights.lambda_normal);

        // Confidence-weighted L1 depth anchor against the manifold.
        double depth_term = 0.0, wsum = 0.0;
        {
            const auto& dc = cached_depth[v];
            const auto& wc = cached_weight[v];
            for (size_t i = 0; i < dc.size(); ++i)
                if (wc[i] > 0.0) wsum += wc[i];
            if (wsum > 0.0) {
                for (size_t i = 0; i < dc.size(); ++i) {
                    if (wc[i] <= 0.0) continue;
                    const double r = render.depth[i] - dc[i];
                    depth_term += wc[i] * std::fabs(r);
                    up.d_depth[i] += cfg.lambda_depth * wc[i] *
                                     (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) / wsum;
                }
                depth_term /= wsum;
            }
        }

        // Structure everywhere on the surfel grids, no confidence weighting.
        SurfelGrads sg;
        sg.resize(set.surfels.size());
        double struct_sum = 0.0;
        for (int c = 0; c < atlas.n_charts(); ++c) {
            auto& sub = subs[c];
            std::vector<core::Vec3d> pts(sub.chart.initial_points.size(), core::Vec3d{});
            for (size_t i = 0; i < pts.size(); ++i)
                if (sub.surfel_of[i] >= 0) pts[i] = set.surfels[sub.surfel_of[i]].center;
            const auto geom = atlas::compute_grid_geometry(pts, sub.chart.valid, sub.chart.w,
                                                           sub.chart.h,
                                                           sub.chart.camera.center());
            std::vector<core::Vec3d> dpts(pts.size(), core::Vec3d{});
            struct_sum += align::structure_loss(sub.chart, geom, pts, dpts,
                                                cfg.weights.lambda_struct / atlas.n_charts(),
                                                sub.weights);
            for (size_t i = 0; i < pts.size(); ++i)
                if (sub.surfel_of[i] >= 0) sg.d_center[sub.surfel_of[i]] += dpts[i];
        }
        rec.structure = struct_sum / atlas.n_charts();
        rec.total = rec.photo + cfg.weights.lambda_struct * rec.structure +
                    cfg.weights.lambda_dist * rec.distortion +
                    cfg.weights.lambda_normal * rec.normal + cfg.lambda_depth * depth_term;
        if (!std::isfinite(rec.total))
            throw Error("free-surfel stage aborted: non-finite loss at iteration " +
                        std::to_string(it));

        rasterize_backward(set.surfels, bundle.cameras[v], render, up, sg);
        free_surfels_backward(atlas, result.model, set, sg, atlas.store);

        atlas.store.clip_grad_norm(cfg.grad_clip);
        adam.step(atlas.store);
        result.report.records.push_back(rec);
    }
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace chartsurf::render
