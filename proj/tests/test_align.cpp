#include <doctest.h>

#include <cmath>

#include "chartsurf/align/align.hpp"
#include "chartsurf/optim/adam.hpp"
#include "chartsurf/optim/gradcheck.hpp"
#include "chartsurf/scene/synth.hpp"

using namespace chartsurf;
using namespace chartsurf::align;
using namespace chartsurf::atlas;
using core::Camera;
using core::Mat3d;
using core::Rng;
using core::Vec3d;

namespace {

Camera identity_camera(int w, int h, double f, const Vec3d& eye = {}) {
    Mat3d k = Mat3d::identity();
    k(0, 0) = k(1, 1) = f;
    k(0, 2) = 0.5 * w;
    k(1, 2) = 0.5 * h;
    return Camera(Mat3d::identity(), Vec3d{} - eye, k, w, h);
}

/// Tiny two-chart atlas over a synthetic bundle; charts see a slightly
/// noisy plane from nearby viewpoints.
AtlasState make_two_chart_atlas(scene::SceneBundle& bundle, uint64_t seed = 3,
                                double depth_noise = 0.15, int wh = 8) {
    Rng rng(seed);
    bundle = scene::SceneBundle{};
    for (int v = 0; v < 2; ++v) {
        const Camera cam = identity_camera(wh, wh, 10.0, Vec3d{0.12 * v, 0.07 * v, -0.03 * v});
        core::DepthMap d(wh, wh);
        for (size_t i = 0; i < d.size(); ++i)
            d[i] = static_cast<float>(2.0 + rng.uniform(-depth_noise, depth_noise));
        bundle.cameras.push_back(cam);
        bundle.depths.push_back(d);
        bundle.images.push_back(core::ColorImage(wh, wh, core::Vec3f(0.5f, 0.5f, 0.5f)));
    }
    // A few SfM points on the z=2 plane, observed in both views.
    for (int k = 0; k < 6; ++k) {
        scene::SfmPoint p;
        p.position = Vec3d{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), 2.0 + rng.uniform(-0.1, 0.1)};
        for (int v = 0; v < 2; ++v) {
            const auto pr = core::project_point(bundle.cameras[v], p.position);
            if (!pr.behind && pr.u > 0.6 && pr.u < wh - 0.6 && pr.v > 0.6 && pr.v < wh - 0.6)
                p.observations.push_back({v, pr.u, pr.v});
        }
        if (p.observations.size() == 2) bundle.sfm_points.push_back(p);
    }
    bundle.validate();
    AtlasBuildConfig cfg;
    cfg.seed = seed;
    cfg.deform.feature_init = 0.3;
    return build_atlas(bundle, cfg);
}

void randomize_net(AtlasState& atlas, uint64_t seed, double scale = 0.15) {
    Rng rng(seed);
    for (const auto& m : atlas.models) {
        for (auto& v : atlas.store.values(m.g_w2)) v = rng.uniform(-scale, scale);
        for (auto& v : atlas.store.values(m.g_b2)) v = rng.uniform(-scale, scale);
        for (auto& v : atlas.store.values(m.g_conf)) v = rng.uniform(-0.5, 0.5);
    }
}

}  // namespace

TEST_CASE("fitting loss: chart through all points with C-hat = 0 gives -alpha*n*log2") {
    scene::SceneBundle bundle;
    AtlasState atlas = make_two_chart_atlas(bundle, 5, 0.0);  // exact plane, no noise
    // Rebuild the SfM points so they lie exactly on the z=2 plane charts;
    // their observations then hit the chart surface with zero residual.
    bundle.sfm_points.clear();
    core::Rng prng(44);
    for (int k = 0; k < 5; ++k) {
        scene::SfmPoint p;
        p.position = core::backproject_pixel(bundle.cameras[0], prng.uniform(1.5, 6.5),
                                             prng.uniform(1.5, 6.5), 2.0);
        for (int v = 0; v < 2; ++v) {
            const auto pr = core::project_point(bundle.cameras[v], p.position);
            if (!pr.behind && pr.u > 0.6 && pr.u < 7.4 && pr.v > 0.6 && pr.v < 7.4)
                p.observations.push_back({v, pr.u, pr.v});
        }
        if (!p.observations.empty()) bundle.sfm_points.push_back(p);
    }
    REQUIRE(!bundle.sfm_points.empty());
    // Rebuild so the affine pre-alignment sees the exact on-surface points
    // and leaves the charts at z = 2.
    AtlasBuildConfig cfg;
    cfg.seed = 5;
    atlas = build_atlas(bundle, cfg);
    const auto obs = build_fit_observations(atlas, bundle);
    const double alpha = 0.2;
    const double fit = fitting_loss(atlas, obs, alpha, false);
    CHECK(fit == doctest::Approx(-alpha * 2.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("fitting loss uses per-coordinate L1") {
    scene::SceneBundle bundle;
    AtlasState atlas = make_two_chart_atlas(bundle, 6, 0.0);
    // Single observation in chart 0, displaced by (1,-2,3); confidence
    // pinned at 1 by a very negative logit; alpha = 0 isolates the term.
    bundle.sfm_points.clear();
    scene::SfmPoint p;
    const int x = 4, y = 4;
    const Vec3d on_chart = atlas.charts[0].initial_points[atlas.charts[0].idx(x, y)];
    p.position = on_chart + Vec3d{1, -2, 3};
    p.observations.push_back({0, x + 0.5, y + 0.5});
    bundle.sfm_points.push_back(p);
    for (auto& v : atlas.store.values(atlas.models[0].g_conf)) v = -40.0;
    const auto obs = build_fit_observations(atlas, bundle);
    const double fit = fitting_loss(atlas, obs, 0.0, false);
    CHECK(fit == doctest::Approx(6.0 / 2.0).epsilon(1e-9));  // n = 2 charts
}

TEST_CASE("optimizing the confidence reaches the 1-D numeric minimum") {
    scene::SceneBundle bundle;
    AtlasState atlas = make_two_chart_atlas(bundle, 7, 0.0);
    bundle.sfm_points.clear();
    const int x = 4, y = 4;
    const double residual = 0.05;
    scene::SfmPoint p;
    p.position = atlas.charts[0].initial_points[atlas.charts[0].idx(x, y)] + Vec3d{residual, 0, 0};
    p.observations.push_back({0, x + 0.5, y + 0.5});
    bundle.sfm_points.push_back(p);
    const auto obs = build_fit_observations(atlas, bundle);
    const double alpha = 0.2;

    optim::Adam adam;
    const size_t g_conf = atlas.models[0].g_conf;
    for (int it = 0; it < 4000; ++it) {
        atlas.store.zero_grads();
        fitting_loss(atlas, obs, alpha, true);
        // Freeze everything but this chart's confidence map.
        for (size_t gi = 0; gi < atlas.store.group_count(); ++gi)
            if (gi != g_conf)
                std::fill(atlas.store.grads(gi).begin(), atlas.store.grads(gi).end(), 0.0);
        adam.step(atlas.store);
    }
    const double c_opt =
        confidence_at(atlas.models[0], atlas.store, atlas.charts[0],
                      atlas.charts[0].uv_of_pixel(x, y));

    // Oracle: minimize g(l) = (C(l)*r)/n - (alpha/n_valid)*log(C(l)) over the
    // single touched texel by golden-section search.
    size_t n_valid = 0;
    for (auto v : atlas.charts[0].valid) n_valid += v;
    const int n_charts = 2;
    auto objective = [&](double logit) {
        const double c = 1.0 + std::exp(logit);
        return c * residual / n_charts - alpha / static_cast<double>(n_valid) * std::log(c);
    };
    double lo = -30, hi = 30;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + 0.382 * (hi - lo), m2 = lo + 0.618 * (hi - lo);
        if (objective(m1) < objective(m2)) hi = m2;
        else lo = m1;
    }
    const double c_oracle = 1.0 + std::exp(0.5 * (lo + hi));
    CHECK(c_opt == doctest::Approx(c_oracle).epsilon(0.02));
    // Closed form: C* = max(1, alpha_eff / r).
    const double alpha_eff = alpha / static_cast<double>(n_valid) * n_charts;
    CHECK(c_oracle == doctest::Approx(std::max(1.0, alpha_eff / residual)).epsilon(0.01));
}

TEST_CASE("converged confidence never increases with the residual") {
    // Closed form on the actual objective: C*(r) = max(1, alpha_eff / r).
    const double alpha_eff = 0.05;
    double prev = 1e18;
    for (double r : {0.001, 0.01, 0.1, 1.0, 10.0}) {
        const double c_star = std::max(1.0, alpha_eff / r);
        CHECK(c_star <= prev);
        prev = c_star;
    }
}

TEST_CASE("structure loss invariances") {
    scene::SceneBundle bundle;
    AtlasState atlas = make_two_chart_atlas(bundle, 9, 0.12);
    Chart& chart = atlas.charts[0];

    SUBCASE("undeformed chart scores exactly zero") {
        const auto plan = plan_for_grid(chart, atlas.models[0]);
        DeformForward fwd;
        deform_forward(atlas.models[0], atlas.store, plan, fwd);
        const auto geom = compute_grid_geometry(fwd.points, chart.valid, chart.w, chart.h,
                                                chart.camera.center());
        const double v = structure_loss(chart, geom, fwd.points, {});
        CHECK(std::fabs(v) <= 1e-12);
    }

    SUBCASE("rigid translation keeps the loss at zero") {
        std::vector<Vec3d> pts = chart.initial_points;
        for (auto& p : pts) p += Vec3d{0.4, -0.3, 0.25};
        const auto geom =
            compute_grid_geometry(pts, chart.valid, chart.w, chart.h, chart.camera.center());
        const double v = structure_loss(chart, geom, pts, {});
        CHECK(std::fabs(v) <= 1e-12);
    }

    SUBCASE("a 10 degree rotation is strictly positive and matches the formula oracle") {
        const double ang = 10.0 * M_PI / 180.0;
        const Mat3d rot = Mat3d::from_rows({1, 0, 0}, {0, std::cos(ang), -std::sin(ang)},
                                           {0, std::sin(ang), std::cos(ang)});
        Vec3d centroid{};
        for (const auto& p : chart.initial_points) centroid += p;
        centroid = centroid / static_cast<double>(chart.initial_points.size());
        std::vector<Vec3d> pts = chart.initial_points;
        for (auto& p : pts) p = rot * (p - centroid) + centroid;
        const auto geom =
            compute_grid_geometry(pts, chart.valid, chart.w, chart.h, chart.camera.center());
        const double v = structure_loss(chart, geom, pts, {});
        CHECK(v > 1e-4);

        // Independent recomputation: mean(1 - N.N0) + 1/4 mean(|M - M0|)
        // from the geometry buffers, summed by straight loops.
        double sn = 0, sm = 0;
        size_t cnt = 0;
        for (size_t i = 0; i < pts.size(); ++i) {
            if (chart.valid[i] == 0 || geom.flags[i] != 0 || chart.ref_flags[i] != 0) continue;
            sn += 1.0 - geom.normals[i].dot(chart.ref_normals[i]);
            sm += std::fabs(geom.curvature[i] - chart.ref_curvature[i]);
            ++cnt;
        }
        CHECK(v == doctest::Approx(sn / cnt + 0.25 * sm / cnt).epsilon(1e-12));
    }
}

TEST_CASE("mutual alignment loss analytic cases") {
    SUBCASE("a single chart contributes nothing") {
        scene::SceneBundle bundle;
        AtlasState atlas = make_two_chart_atlas(bundle, 11, 0.0);
        atlas.charts.resize(1);
        atlas.models.resize(1);
        std::vector<SamplingPlan> plans{plan_for_grid(atlas.charts[0], atlas.models[0])};
        std::vector<DeformForward> fwd(1);
        deform_forward(atlas.models[0], atlas.store, plans[0], fwd[0]);
        MutualAlignOptions opt;
        opt.tau = 0.1;
        CHECK(mutual_alignment_loss(atlas, fwd, plans, opt, nullptr) == 0.0);
    }

    SUBCASE("coincident charts score ~0; 10*tau separation clamps to tau") {
        // Two identical cameras looking at fronto-parallel planes.
        const int wh = 10;
        scene::SceneBundle bundle;
        for (int v = 0; v < 2; ++v) {
            bundle.cameras.push_back(identity_camera(wh, wh, 12.0));
            bundle.depths.push_back(core::DepthMap(wh, wh, 2.f));
            bundle.images.push_back(core::ColorImage(wh, wh, core::Vec3f(0.5f, 0.5f, 0.5f)));
        }
        scene::SfmPoint p;
        p.position = Vec3d{0, 0, 2};
        p.observations.push_back({0, wh / 2.0, wh / 2.0});
        p.observations.push_back({1, wh / 2.0, wh / 2.0});
        bundle.sfm_points.push_back(p);
        bundle.validate();
        AtlasBuildConfig cfg;
        cfg.seed = 2;
        AtlasState atlas = build_atlas(bundle, cfg);

        std::vector<SamplingPlan> plans(2);
        std::vector<DeformForward> fwd(2);
        for (int i = 0; i < 2; ++i) {
            plans[i] = plan_for_grid(atlas.charts[i], atlas.models[i]);
            deform_forward(atlas.models[i], atlas.store, plans[i], fwd[i]);
        }
        MutualAlignOptions opt;
        opt.tau = 0.05;
        const double coincident = mutual_alignment_loss(atlas, fwd, plans, opt, nullptr);
        CHECK(std::fabs(coincident) < 1e-9);

        // Push chart 1 back by 10*tau along z.
        for (auto& q : fwd[1].points) q.z += 10.0 * opt.tau;
        const double separated = mutual_alignment_loss(atlas, fwd, plans, opt, nullptr);
        CHECK(separated == doctest::Approx(opt.tau).epsilon(1e-9));
    }
}

TEST_CASE("alignment loss gradients match finite differences") {
    scene::SceneBundle bundle;
    AtlasState atlas = make_two_chart_atlas(bundle, 13, 0.1);
    randomize_net(atlas, 14);
    const auto obs = build_fit_observations(atlas, bundle);

    SUBCASE("fitting loss") {
        auto loss = [&](optim::ParamStore&) { return fitting_loss(atlas, obs, 0.2, true); };
        const auto res = optim::check_gradients(loss, atlas.store, 1e-5, 0.05, 21, 6);
        INFO("worst: " << res.worst_param);
        CHECK(res.max_rel_error < 1e-5);
    }

    SUBCASE("structure loss") {
        auto loss = [&](optim::ParamStore&) {
            double total = 0;
            for (int i = 0; i < atlas.n_charts(); ++i) {
                const auto plan = plan_for_grid(atlas.charts[i], atlas.models[i]);
                DeformForward fwd;
                deform_forward(atlas.models[i], atlas.store, plan, fwd);
                std::vector<Vec3d> dpts(plan.size(), Vec3d{});
                const auto geom = compute_grid_geometry(fwd.points, atlas.charts[i].valid,
                                                        atlas.charts[i].w, atlas.charts[i].h,
                                                        atlas.charts[i].camera.center());
                total += structure_loss(atlas.charts[i], geom, fwd.points, dpts);
                deform_backward(atlas.models[i], atlas.store, plan, fwd, dpts);
            }
            return total;
        };
        const auto res = optim::check_gradients(loss, atlas.store, 1e-5, 0.05, 22, 6);
        INFO("worst: " << res.worst_param);
        CHECK(res.max_rel_error < 1e-5);
    }

    SUBCASE("mutual alignment loss, symmetric gradients") {
        auto loss = [&](optim::ParamStore&) {
            std::vector<SamplingPlan> plans(atlas.n_charts());
            std::vector<DeformForward> fwd(atlas.n_charts());
            for (int i = 0; i < atlas.n_charts(); ++i) {
                plans[i] = plan_for_grid(atlas.charts[i], atlas.models[i]);
                deform_forward(atlas.models[i], atlas.store, plans[i], fwd[i]);
            }
            std::vector<std::vector<Vec3d>> dpts(atlas.n_charts());
            for (int i = 0; i < atlas.n_charts(); ++i) dpts[i].assign(plans[i].size(), Vec3d{});
            MutualAlignOptions opt;
            opt.tau = 10.0;  // far from the clamp kink
            opt.symmetric = true;
            const double v = mutual_alignment_loss(atlas, fwd, plans, opt, &dpts);
            for (int i = 0; i < atlas.n_charts(); ++i)
                deform_backward(atlas.models[i], atlas.store, plans[i], fwd[i], dpts[i]);
            return v;
        };
        const auto res = optim::check_gradients(loss, atlas.store, 1e-5, 0.05, 23, 6);
        INFO("worst: " << res.worst_param);
        CHECK(res.max_rel_error < 1e-5);
    }

    SUBCASE("total alignment loss") {
        AlignLossWeights w;
        w.tau = 10.0;
        auto loss = [&](optim::ParamStore&) {
            return evaluate_alignment_losses(atlas, obs, w, true, /*symmetric=*/true, 0, 1.0)
                .total;
        };
        const auto res = optim::check_gradients(loss, atlas.store, 1e-5, 0.03, 24, 4);
        INFO("worst: " << res.worst_param);
        CHECK(res.max_rel_error < 1e-5);
    }
}

TEST_CASE("total equals fit + 4*struct + 5*align exactly") {
    scene::SceneBundle bundle;
    AtlasState atlas = make_two_chart_atlas(bundle, 15, 0.1);
    randomize_net(atlas, 16);
    const auto obs = build_fit_observations(atlas, bundle);
    AlignLossWeights w;
    w.tau = 0.02;
    const auto ev = evaluate_alignment_losses(atlas, obs, w, false);
    CHECK(ev.total == ev.fit + 4.0 * ev.structure + 5.0 * ev.align);
}

TEST_CASE("zero alignment iterations leave the charts unchanged") {
    scene::SceneBundle bundle;
    AtlasState atlas = make_two_chart_atlas(bundle, 17, 0.1);
    const auto before = atlas.store.values(atlas.models[0].g_w2);
    std::vector<double> copy(before.begin(), before.end());
    AlignConfig cfg;
    cfg.iters = 0;
    run_alignment(atlas, bundle, cfg);
    const auto after = atlas.store.values(atlas.models[0].g_w2);
    for (size_t i = 0; i < copy.size(); ++i) CHECK(after[i] == copy[i]);
}

TEST_CASE("alignment on a corrupted scene reduces depth error") {
    // Small-scale version of the scale-recovery scenario; the acceptance
    // suite runs the full 128x128 five-view variant.
    const auto spec = scene::make_preset_scene("boxplane", 48, 48, 4);
    scene::CorruptionSpec corr;
    corr.object_scale_min = 0.5;
    corr.object_scale_max = 2.0;
    corr.seed = 31;
    scene::SceneBundle bundle;
    scene::GroundTruth gt;
    scene::generate_scene(spec, corr, 120, bundle, gt);

    AtlasBuildConfig bcfg;
    bcfg.seed = 4;
    AtlasState atlas = build_atlas(bundle, bcfg);

    auto mean_rel_depth_err = [&]() {
        double sum = 0;
        size_t cnt = 0;
        for (int i = 0; i < atlas.n_charts(); ++i) {
            const auto plan = plan_for_grid(atlas.charts[i], atlas.models[i]);
            DeformForward fwd;
            deform_forward(atlas.models[i], atlas.store, plan, fwd);
            for (int y = 0; y < atlas.charts[i].h; ++y)
                for (int x = 0; x < atlas.charts[i].w; ++x) {
                    const size_t p = atlas.charts[i].idx(x, y);
                    if (atlas.charts[i].valid[p] == 0) continue;
                    const float dgt = gt.clean_depths[i].at(x, y);
                    if (dgt <= 0.f) continue;
                    const double dcur = atlas.charts[i].camera.depth_of(fwd.points[p]);
                    sum += std::fabs(dcur - dgt) / dgt;
                    ++cnt;
                }
        }
        return sum / static_cast<double>(cnt);
    };

    const double err0 = mean_rel_depth_err();
    AlignConfig cfg;
    cfg.iters = 400;
    cfg.weights.tau = 0.01 * bundle.scene_diameter();
    cfg.seed = 5;
    const auto report = run_alignment(atlas, bundle, cfg);
    const double err1 = mean_rel_depth_err();
    INFO("err0=" << err0 << " err1=" << err1);
    CHECK(err1 < 0.6 * err0);

    // Loss trend: the 100-iteration moving average decreases overall.
    auto ma = [&](int start) {
        double s = 0;
        for (int i = start; i < start + 100; ++i) s += report.records[i].total;
        return s / 100.0;
    };
    CHECK(ma(300) < ma(0));
}
