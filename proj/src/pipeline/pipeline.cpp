// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/pipeline/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "chartsurf/core/parallel.hpp"
#include "chartsurf/io/bundle_io.hpp"
#include "chartsurf/scene/synth.hpp"
#include "chartsurf/io/pfm.hpp"
#include "chartsurf/io/ply.hpp"
#include "chartsurf/io/png.hpp"
#include "chartsurf/meshing/tetra.hpp"
#include "chartsurf/meshing/tsdf.hpp"

namespace chartsurf::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

struct StageTimer {
    const char* name;
    Clock::time_point start = Clock::now();
    explicit StageTimer(const char* n) : name(n) {
        std::fprintf(stderr, "[chartsurf] stage %s...\n", name);
    }
    ~StageTimer() {
        std::fprintf(stderr, "[chartsurf] stage %s done in %.2fs\n", name,
                     std::chrono::duration<double>(Clock::now() - start).count());
    }
};

std::string view_stem(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d", i);
    return buf;
}

scene::CorruptionSpec corruption_of(const Config& cfg) {
    scene::CorruptionSpec corr;
    corr.object_scale_min = cfg.object_scale_min;
    corr.object_scale_max = cfg.object_scale_max;
    corr.view_scale_min = cfg.view_scale_min;
    corr.view_scale_max = cfg.view_scale_max;
    corr.view_offset_max = cfg.view_offset_max;
    corr.pixel_noise = cfg.pixel_noise;
    corr.sfm_outlier_fraction = cfg.sfm_outlier_fraction;
    corr.seed = cfg.seed;
    return corr;
}

atlas::AtlasBuildConfig atlas_config(const Config& cfg) {
    atlas::AtlasBuildConfig b;
    b.max_side = cfg.chart_max_side;
    b.encoding_ratio_override = cfg.encoding_ratio;
    b.seed = cfg.seed;
    b.deform.feature_dim = cfg.feature_dim;
    b.deform.hidden = cfg.hidden;
    b.deform.depth_bins = cfg.depth_bins;
    b.deform.lr_deform = cfg.lr_deform;
    b.deform.lr_conf = cfg.lr_conf;
    return b;
}

void write_align_report(const align::AlignReport& report, const fs::path& path) {
    std::ofstream out(path);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    out << std::setprecision(17);
    for (const auto& r : report.records) {
        nlohmann::json j;
        j["iter"] = r.iter;
        j["fit"] = r.fit;
        j["struct"] = r.structure;
        j["align"] = r.align;
        j["total"] = r.total;
        out << j.dump() << "\n";
    }
}

void write_refine_report(const render::RefineReport& report, const fs::path& path) {
    std::ofstream out(path);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    out << std::setprecision(17);
    for (const auto& r : report.records) {
        nlohmann::json j;
        j["iter"] = r.iter;
        j["view"] = r.view;
        j["photo"] = r.photo;
        j["struct"] = r.structure;
        j["dist"] = r.distortion;
        j["normal"] = r.normal;
        j["total"] = r.total;
        out << j.dump() << "\n";
    }
}

render::RefineConfig refine_config(const Config& cfg) {
    render::RefineConfig rc;
    rc.weights.lambda_dssim = cfg.lambda_dssim;
    rc.weights.lambda_struct = cfg.lambda_struct_refine;
    rc.weights.lambda_dist = cfg.lambda_dist;
    rc.weights.lambda_normal = cfg.lambda_normal;
    rc.weights.schedule_iter = cfg.schedule_iter;
    rc.iters = cfg.refine_iters;
    rc.lr_deform = cfg.refine_lr_deform;
    rc.lr_color = cfg.lr_color;
    rc.lr_opacity = cfg.lr_opacity;
    rc.opacity_logit_init = cfg.opacity_logit_init;
    rc.seed = cfg.seed;
    return rc;
}

}  // namespace

void run_synth(const Config& cfg, const fs::path& out) {
    StageTimer timer("synth");
    core::set_thread_count(cfg.threads);
    const auto spec =
        scene::make_preset_scene(cfg.scene_preset, cfg.width, cfg.height, cfg.views);
    scene::SceneBundle bundle;
    scene::GroundTruth gt;
    scene::generate_scene(spec, corruption_of(cfg), cfg.sfm_points_per_view * cfg.views,
                          bundle, gt);
    io::write_bundle(bundle, out / "bundle", &gt);
}

void run_align(const Config& cfg, const fs::path& out) {
    StageTimer timer("align");
    core::set_thread_count(cfg.threads);
    const auto bundle = io::read_bundle(out / "bundle");
    atlas::AtlasState atlas = atlas::build_atlas(bundle, atlas_config(cfg));

    align::AlignConfig acfg;
    acfg.weights.lambda_struct = cfg.lambda_struct_align;
    acfg.weights.lambda_align = cfg.lambda_align;
    acfg.weights.alpha = cfg.conf_alpha;
    acfg.weights.tau = cfg.tau_rel * bundle.scene_diameter();
    acfg.iters = cfg.align_iters;
    acfg.pair_sample_fraction = cfg.pair_sample_fraction;
    acfg.seed = cfg.seed;
    const auto report = align::run_alignment(atlas, bundle, acfg);
    std::fprintf(stderr, "[chartsurf] align: %d iters, final total %.6f, conf median %.3f\n",
                 acfg.iters,
                 report.records.empty() ? 0.0 : report.records.back().total,
                 report.conf_median);
    atlas::save_checkpoint(atlas, out / "charts_aligned.bin");
    write_align_report(report, out / "align_report.jsonl");
}

void run_refine(const Config& cfg, const fs::path& out) {
    StageTimer timer("refine");
    core::set_thread_count(cfg.threads);
    const auto bundle = io::read_bundle(out / "bundle");
    atlas::AtlasState atlas = atlas::load_checkpoint(out / "charts_aligned.bin");
    const auto report = render::run_refinement(atlas, bundle, refine_config(cfg));
    std::fprintf(stderr, "[chartsurf] refine: %d iters, final total %.6f\n", cfg.refine_iters,
                 report.records.empty() ? 0.0 : report.records.back().total);
    atlas::save_checkpoint(atlas, out / "charts_refined.bin");
    write_refine_report(report, out / "refine_report.jsonl");
}

void run_free_stage(const Config& cfg, const fs::path& out) {
    StageTimer timer("free-stage");
    core::set_thread_count(cfg.threads);
    const auto bundle = io::read_bundle(out / "bundle");
    atlas::AtlasState atlas = atlas::load_checkpoint(out / "charts_refined.bin");
    render::FreeStageConfig fc;
    fc.weights.lambda_dssim = cfg.lambda_dssim;
    fc.weights.lambda_struct = cfg.lambda_struct_refine;
    fc.weights.lambda_dist = cfg.lambda_dist;
    fc.weights.lambda_normal = cfg.lambda_normal;
    fc.lambda_depth = cfg.lambda_depth;
    fc.iters = cfg.free_iters;
    fc.lr_free = cfg.lr_free;
    fc.lr_color = cfg.lr_color;
    fc.lr_opacity = cfg.lr_opacity;
    fc.seed = cfg.seed;
    const auto result = render::run_free_gaussian_stage(atlas, bundle, fc);
    atlas::save_checkpoint(atlas, out / "charts_free.bin");
    write_refine_report(result.report, out / "free_report.jsonl");
}

LoadedState load_state(const fs::path& checkpoint) {
    LoadedState state;
    state.atlas = atlas::load_checkpoint(checkpoint);
    if (!state.atlas.store.has_group("free.center")) return state;

    // Rebuild the free-surfel bookkeeping from a deterministic manifold
    // instantiation; the optimized values live in the loaded store.
    std::vector<atlas::DeformForward> fwd(state.atlas.n_charts());
    for (int c = 0; c < state.atlas.n_charts(); ++c) {
        const auto plan = atlas::plan_for_grid(state.atlas.charts[c], state.atlas.models[c]);
        deform_forward(state.atlas.models[c], state.atlas.store, plan, fwd[c]);
    }
    const auto manifold = render::instantiate_surfels(state.atlas, fwd);
    state.free_model.count = static_cast<int>(manifold.surfels.size());
    for (const auto& s : manifold.surfels) {
        state.free_model.chart.push_back(s.chart);
        state.free_model.px.push_back(s.px);
        state.free_model.py.push_back(s.py);
        state.free_model.orient_sign.push_back(s.orient_sign);
    }
    state.free_model.g_center = state.atlas.store.index_of("free.center");
    state.free_model.g_logscale = state.atlas.store.index_of("free.logscale");
    state.free_model.g_quat = state.atlas.store.index_of("free.quat");
    CHARTSURF_CHECK_MSG(
        state.atlas.store.values(state.free_model.g_center).size() ==
            3 * static_cast<size_t>(state.free_model.count),
        "free-surfel parameter count does not match the manifold instantiation");
    state.has_free = true;
    return state;
}

MeshingInputs gather_meshing_inputs(LoadedState& state, const scene::SceneBundle& bundle) {
    MeshingInputs mi;
    render::SurfelSet set;
    if (state.has_free) {
        set = render::free_surfels_forward(state.atlas, state.free_model, state.atlas.store);
    } else {
        std::vector<atlas::DeformForward> fwd(state.atlas.n_charts());
        for (int c = 0; c < state.atlas.n_charts(); ++c) {
            const auto plan =
                atlas::plan_for_grid(state.atlas.charts[c], state.atlas.models[c]);
            deform_forward(state.atlas.models[c], state.atlas.store, plan, fwd[c]);
        }
        set = render::instantiate_surfels(state.atlas, fwd);
    }
    for (const auto& s : set.surfels) {
        mi.positions.push_back(s.center);
        mi.normals.push_back(s.normal);
        mi.radii.push_back(std::max(s.tu.norm(), s.tv.norm()));
    }
    mi.diameter = core::bounding_diameter(mi.positions);

    for (int v = 0; v < bundle.n_views(); ++v) {
        const auto render =
            render::rasterize(set.surfels, bundle.cameras[v], core::Vec3d{0, 0, 0});
        core::DepthMap depth(render.width, render.height, 0.f);
        for (int y = 0; y < render.height; ++y)
            for (int x = 0; x < render.width; ++x) {
                const size_t i = render.pixel(x, y);
                if (render.alpha[i] >= 0.5 && render.depth[i] > 0.0)
                    depth.at(x, y) = static_cast<float>(render.depth[i]);
            }
        mi.depths.push_back(std::move(depth));
        mi.cameras.push_back(bundle.cameras[v]);
    }
    return mi;
}

core::TriangleMesh extract_mesh(const Config& cfg, const MeshingInputs& mi) {
    if (cfg.mesh_method == "tsdf") {
        const double v0 = cfg.tsdf_voxel_rel * mi.diameter;
        const auto mr = meshing::fuse_multires_tsdf(mi.depths, mi.cameras, cfg.tsdf_levels, v0,
                                                    cfg.tsdf_trunc_mult * v0);
        return meshing::extract_tsdf_mesh(mr);
    }
    CHARTSURF_CHECK_MSG(cfg.mesh_method == "tetra",
                        "unknown mesh method '" << cfg.mesh_method << "'");
    meshing::BinaryOpacityField field(mi.depths, mi.cameras,
                                      meshing::SampleGrid(mi.positions, mi.radii),
                                      cfg.dilation_kappa);
    const auto grid = meshing::build_adaptive_tetra_grid(mi.positions, mi.normals, mi.radii,
                                                         cfg.tetra_budget, field, cfg.seed);
    return meshing::extract_tetra_mesh(grid, field);
}

void run_mesh(const Config& cfg, const fs::path& out) {
    StageTimer timer("mesh");
    core::set_thread_count(cfg.threads);
    const auto bundle = io::read_bundle(out / "bundle");
    const fs::path ckpt = fs::exists(out / "charts_free.bin") ? out / "charts_free.bin"
                          : fs::exists(out / "charts_refined.bin")
                              ? out / "charts_refined.bin"
                              : out / "charts_aligned.bin";
    LoadedState state = load_state(ckpt);
    MeshingInputs mi = gather_meshing_inputs(state, bundle);
    const auto mesh = extract_mesh(cfg, mi);
    std::fprintf(stderr, "[chartsurf] mesh: %zu vertices, %zu faces (%s)\n",
                 mesh.vertices.size(), mesh.faces.size(), cfg.mesh_method.c_str());
    io::write_ply(mesh, out / "mesh.ply");
}

void run_render(const Config& cfg, const fs::path& out) {
    StageTimer timer("render");
    core::set_thread_count(cfg.threads);
    const auto bundle = io::read_bundle(out / "bundle");
    const fs::path ckpt = fs::exists(out / "charts_free.bin") ? out / "charts_free.bin"
                          : fs::exists(out / "charts_refined.bin")
                              ? out / "charts_refined.bin"
                              : out / "charts_aligned.bin";
    LoadedState state = load_state(ckpt);
    fs::create_directories(out / "renders");
    for (int v = 0; v < bundle.n_views(); ++v) {
        const auto render = render::render_scene(
            state.atlas, bundle.cameras[v], core::Vec3d{0, 0, 0},
            state.has_free ? &state.free_model : nullptr);
        core::ColorImage img(render.width, render.height);
        core::ColorImage nrm(render.width, render.height);
        core::DepthMap depth(render.width, render.height, 0.f);
        for (size_t i = 0; i < img.size(); ++i) {
            img[i] = core::Vec3f(render.color[i]);
            nrm[i] = core::Vec3f(render.normal[i] * 0.5 + core::Vec3d{0.5, 0.5, 0.5});
            depth[i] = render.alpha[i] >= 0.5 ? static_cast<float>(render.depth[i]) : 0.f;
        }
        io::write_png(img, out / "renders" / (view_stem(v) + ".png"));
        io::write_png(nrm, out / "renders" / (view_stem(v) + "_normal.png"));
        io::write_pfm(depth, out / "renders" / (view_stem(v) + "_depth.pfm"));
    }
}

metrics::EvalReport run_eval(const Config& cfg, const fs::path& out) {
    StageTimer timer("eval");
    core::set_thread_count(cfg.threads);
    const auto bundle = io::read_bundle(out / "bundle");
    const fs::path ckpt = fs::exists(out / "charts_free.bin") ? out / "charts_free.bin"
                          : fs::exists(out / "charts_refined.bin")
                              ? out / "charts_refined.bin"
                              : out / "charts_aligned.bin";
    LoadedState state = load_state(ckpt);

    metrics::EvalReport report;
    core::TriangleMesh gt_mesh;
    if (io::read_gt_mesh(out / "bundle", gt_mesh) && fs::exists(out / "mesh.ply")) {
        const auto mesh = io::read_ply(out / "mesh.ply");
        const auto ps = metrics::sample_mesh_surface(mesh, cfg.fscore_samples, cfg.seed);
        const auto gs = metrics::sample_mesh_surface(gt_mesh, cfg.fscore_samples, cfg.seed);
        if (!ps.empty() && !gs.empty()) report.chamfer = metrics::chamfer_distance(ps, gs);
        const double diam = core::bounding_diameter(gs);
        report.f_score_threshold = cfg.fscore_threshold_rel * diam;
        report.f_score = metrics::f_score(mesh, gt_mesh, report.f_score_threshold,
                                          cfg.fscore_samples, cfg.seed);
    }

    // Image metrics on the held-out views when present, else training views.
    std::vector<core::Camera> cams;
    std::vector<core::ColorImage> targets;
    if (!io::read_test_views(out / "bundle", cams, targets)) {
        cams = bundle.cameras;
        targets = bundle.images;
    }
    double ssim_sum = 0.0;
    for (size_t v = 0; v < cams.size(); ++v) {
        const auto render = render::render_scene(
            state.atlas, cams[v], core::Vec3d{0, 0, 0},
            state.has_free ? &state.free_model : nullptr);
        core::ColorImage img(render.width, render.height);
        for (size_t i = 0; i < img.size(); ++i) img[i] = core::Vec3f(render.color[i]);
        report.psnr_per_view.push_back(metrics::psnr(img, targets[v]));
        ssim_sum += metrics::ssim_metric(img, targets[v]);
    }
    if (!report.psnr_per_view.empty()) {
        double s = 0;
        for (double p : report.psnr_per_view) s += std::isfinite(p) ? p : 99.0;
        report.mean_psnr = s / report.psnr_per_view.size();
        report.q10_psnr = report.psnr_per_view.size() >= 2
                              ? metrics::quantile(report.psnr_per_view, 0.1)
                              : report.psnr_per_view.front();
        report.ssim_mean = ssim_sum / report.psnr_per_view.size();
    }
    report.write_json(out / "eval.json");
    return report;
}

metrics::EvalReport run_pipeline(const Config& cfg, const fs::path& out) {
    fs::create_directories(out);
    run_synth(cfg, out);
    run_align(cfg, out);
    run_refine(cfg, out);
    if (cfg.free_stage) run_free_stage(cfg, out);
    run_mesh(cfg, out);
    run_render(cfg, out);
    return run_eval(cfg, out);
}

}  // namespace chartsurf::pipeline
