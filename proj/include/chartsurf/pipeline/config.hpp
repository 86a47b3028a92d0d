// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "chartsurf/align/align.hpp"
#include "chartsurf/render/refine.hpp"

namespace chartsurf::pipeline {

/// Everything the pipeline needs, with defaults embedded. A JSON config
/// overrides keys; CLI flags override the config.
struct Config {
    uint64_t seed = 1;
    int threads = 0;  // 0 = hardware concurrency

    // Scene synthesis.
    std::string scene_preset = "boxplane";
    int views = 5;
    int width = 64, height = 64;
    double object_scale_min = 0.5, object_scale_max = 2.0;
    double view_scale_min = 1.0, view_scale_max = 1.0;
    double view_offset_max = 0.0;
    double pixel_noise = 0.0;
    double sfm_outlier_fraction = 0.0;
    int sfm_points_per_view = 30;

    // Charts / deformation model.
    int chart_max_side = 512;
    double encoding_ratio = -1.0;  // <0: 0.1 for <=3 views else 0.4
    int feature_dim = 32;
    int hidden = 64;
    int depth_bins = 32;

    // Alignment.
    int align_iters = 1000;
    double lambda_struct_align = 4.0;
    double lambda_align = 5.0;
    double conf_alpha = 0.2;
    double tau_rel = 0.01;  // fraction of scene diameter
    double pair_sample_fraction = 0.25;
    double lr_deform = 1e-3;
    double lr_conf = 1e-2;

    // Refinement.
    int refine_iters = 3000;
    double refine_lr_deform = 2e-4;  // stage-2 geometry rate (stage 1 uses lr_deform)
    double lambda_dssim = 0.2;
    double lambda_struct_refine = 1.0;
    double lambda_dist = 500.0;
    double lambda_normal = 0.25;
    int schedule_iter = 600;
    double lr_color = 2.5e-2;
    double lr_opacity = 5e-2;
    double opacity_logit_init = 5.0;

    // Free-surfel stage.
    bool free_stage = true;
    int free_iters = 300;
    double lambda_depth = 0.75;
    double lr_free = 1e-3;

    // Meshing.
    std::string mesh_method = "tetra";  // or "tsdf"
    int tetra_budget = 50000;
    double dilation_kappa = 1.0;
    double tsdf_voxel_rel = 0.01;  // fraction of scene diameter
    int tsdf_levels = 3;
    double tsdf_trunc_mult = 3.0;  // trunc = mult * voxel

    // Evaluation.
    double fscore_threshold_rel = 0.005;
    int fscore_samples = 100000;

    static Config from_json_file(const std::filesystem::path& path);
    void apply_json_file(const std::filesystem::path& path);
    std::string to_json() const;
};

}  // namespace chartsurf::pipeline
