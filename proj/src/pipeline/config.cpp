// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/pipeline/config.hpp"

#include <fstream>

#include <json.hpp>

namespace chartsurf::pipeline {

using json = nlohmann::json;

namespace {

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Config Config::from_json_file(const std::filesystem::path& path) {
    Config cfg;
    cfg.apply_json_file(path);
    return cfg;
}

void Config::apply_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw ParseError("config: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("config: " + path.string() + ": " + e.what());
    }
    get_if(j, "seed", seed);
    get_if(j, "threads", threads);
    get_if(j, "scene_preset", scene_preset);
    get_if(j, "views", views);
    get_if(j, "width", width);
    get_if(j, "height", height);
    get_if(j, "object_scale_min", object_scale_min);
    get_if(j, "object_scale_max", object_scale_max);
    get_if(j, "view_scale_min", view_scale_min);
    get_if(j, "view_scale_max", view_scale_max);
    get_if(j, "view_offset_max", view_offset_max);
    get_if(j, "pixel_noise", pixel_noise);
    get_if(j, "sfm_outlier_fraction", sfm_outlier_fraction);
    get_if(j, "sfm_points_per_view", sfm_points_per_view);
    get_if(j, "chart_max_side", chart_max_side);
    get_if(j, "encoding_ratio", encoding_ratio);
    get_if(j, "feature_dim", feature_dim);
    get_if(j, "hidden", hidden);
    get_if(j, "depth_bins", depth_bins);
    get_if(j, "align_iters", align_iters);
    get_if(j, "lambda_struct_align", lambda_struct_align);
    get_if(j, "lambda_align", lambda_align);
    get_if(j, "conf_alpha", conf_alpha);
    get_if(j, "tau_rel", tau_rel);
    get_if(j, "pair_sample_fraction", pair_sample_fraction);
    get_if(j, "lr_deform", lr_deform);
    get_if(j, "lr_conf", lr_conf);
    get_if(j, "refine_iters", refine_iters);
    get_if(j, "refine_lr_deform", refine_lr_deform);
    get_if(j, "lambda_dssim", lambda_dssim);
    get_if(j, "lambda_struct_refine", lambda_struct_refine);
    get_if(j, "lambda_dist", lambda_dist);
    get_if(j, "lambda_normal", lambda_normal);
    get_if(j, "schedule_iter", schedule_iter);
    get_if(j, "lr_color", lr_color);
    get_if(j, "lr_opacity", lr_opacity);
    get_if(j, "opacity_logit_init", opacity_logit_init);
    get_if(j, "free_stage", free_stage);
    get_if(j, "free_iters", free_iters);
    get_if(j, "lambda_depth", lambda_depth);
    get_if(j, "lr_free", lr_free);
    get_if(j, "mesh_method", mesh_method);
    get_if(j, "tetra_budget", tetra_budget);
    get_if(j, "dilation_kappa", dilation_kappa);
    get_if(j, "tsdf_voxel_rel", tsdf_voxel_rel);
    get_if(j, "tsdf_levels", tsdf_levels);
    get_if(j, "tsdf_trunc_mult", tsdf_trunc_mult);
    get_if(j, "fscore_threshold_rel", fscore_threshold_rel);
    get_if(j, "fscore_samples", fscore_samples);
}

std::string Config::to_json() const {
    json j;
    j["seed"] = seed;
    j["threads"] = threads;
    j["scene_preset"] = scene_preset;
    j["views"] = views;
    j["width"] = width;
    j["height"] = height;
    j["object_scale_min"] = object_scale_min;
    j["object_scale_max"] = object_scale_max;
    j["view_scale_min"] = view_scale_min;
    j["view_scale_max"] = view_scale_max;
    j["view_offset_max"] = view_offset_max;
    j["pixel_noise"] = pixel_noise;
    j["sfm_outlier_fraction"] = sfm_outlier_fraction;
    j["sfm_points_per_view"] = sfm_points_per_view;
    j["chart_max_side"] = chart_max_side;
    j["encoding_ratio"] = encoding_ratio;
    j["feature_dim"] = feature_dim;
    j["hidden"] = hidden;
    j["depth_bins"] = depth_bins;
    j["align_iters"] = align_iters;
    j["lambda_struct_align"] = lambda_struct_align;
    j["lambda_align"] = lambda_align;
    j["conf_alpha"] = conf_alpha;
    j["tau_rel"] = tau_rel;
    j["pair_sample_fraction"] = pair_sample_fraction;
    j["lr_deform"] = lr_deform;
    j["lr_conf"] = lr_conf;
    j["refine_iters"] = refine_iters;
    j["refine_lr_deform"] = refine_lr_deform;
    j["lambda_dssim"] = lambda_dssim;
    j["lambda_struct_refine"] = lambda_struct_refine;
    j["lambda_dist"] = lambda_dist;
    j["lambda_normal"] = lambda_normal;
    j["schedule_iter"] = schedule_iter;
    j["lr_color"] = lr_color;
    j["lr_opacity"] = lr_opacity;
    j["opacity_logit_init"] = opacity_logit_init;
    j["free_stage"] = free_stage;
    j["free_iters"] = free_iters;
    j["lambda_depth"] = lambda_depth;
    j["lr_free"] = lr_free;
    j["mesh_method"] = mesh_method;
    j["tetra_budget"] = tetra_budget;
    j["dilation_kappa"] = dilation_kappa;
    j["tsdf_voxel_rel"] = tsdf_voxel_rel;
    j["tsdf_levels"] = tsdf_levels;
    j["tsdf_trunc_mult"] = tsdf_trunc_mult;
    j["fscore_threshold_rel"] = fscore_threshold_rel;
    j["fscore_samples"] = fscore_samples;
    return j.dump(1);
}

}  // namespace chartsurf::pipeline
