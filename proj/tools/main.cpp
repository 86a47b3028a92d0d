// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
//
// chartsurf: sparse-view surface reconstruction from chart atlases with
// Gaussian-surfel rendering. Subcommands wire the pipeline stages together
// over a bundle directory.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "chartsurf/pipeline/pipeline.hpp"

using namespace chartsurf;

int main(int argc, char** argv) {
    CLI::App app{"chartsurf: chart-atlas surface reconstruction"};
    app.require_subcommand(0, 1);
    app.fallthrough(true);

    std::string config_path;
    std::string out_dir = "out";
    int64_t seed = -1;
    int threads = -1;
    int views = -1;
    std::string mesh_method;
    bool no_free_stage = false;
    bool print_config = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "RNG seed (overrides config)");
    app.add_option("--threads", threads, "worker cap, 0 = hardware (overrides config)");
    app.add_option("--views", views, "training view count (overrides config)");
    app.add_option("--mesh-method", mesh_method, "mesh extractor: tsdf or tetra");
    app.add_flag("--no-free-stage", no_free_stage, "skip the free-surfel stage");
    app.add_flag("--print-config", print_config, "dump the effective config and exit");

    auto* synth = app.add_subcommand("synth", "generate the synthetic bundle");
    auto* align = app.add_subcommand("align", "stage 1: align charts to SfM points");
    auto* refine = app.add_subcommand("refine", "stage 2: photometric refinement");
    auto* free_stage = app.add_subcommand("free-stage", "stage 3: free-surfel refinement");
    auto* mesh = app.add_subcommand("mesh", "extract the surface mesh");
    auto* render = app.add_subcommand("render", "write renders for every training view");
    auto* eval = app.add_subcommand("eval", "compute geometry and image metrics");
    auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage in order");
    int budget = -1;
    mesh->add_option("--budget", budget, "tetra vertex budget");
    pipeline_cmd->add_option("--budget", budget, "tetra vertex budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;  // --help
        std::fprintf(stderr, "%s\n", e.what());
        std::fprintf(stderr, "%s", app.help().c_str());
        return 2;
    }

    pipeline::Config cfg;
    try {
        if (!config_path.empty()) cfg.apply_json_file(config_path);
    } catch (const Error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
    if (threads >= 0) cfg.threads = threads;
    if (views > 0) cfg.views = views;
    if (!mesh_method.empty()) cfg.mesh_method = mesh_method;
    if (budget > 0) cfg.tetra_budget = budget;
    if (no_free_stage) cfg.free_stage = false;

    if (print_config) {
        std::printf("%s\n", cfg.to_json().c_str());
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::fprintf(stderr, "missing subcommand\n%s", app.help().c_str());
        return 2;
    }

    const std::filesystem::path out(out_dir);
    const char* stage = "unknown";
    try {
        std::filesystem::create_directories(out);
        if (synth->parsed()) {
            stage = "synth";
            pipeline::run_synth(cfg, out);
        } else if (align->parsed()) {
            stage = "align";
            pipeline::run_align(cfg, out);
        } else if (refine->parsed()) {
            stage = "refine";
            pipeline::run_refine(cfg, out);
        } else if (free_stage->parsed()) {
            stage = "free-stage";
            pipeline::run_free_stage(cfg, out);
        } else if (mesh->parsed()) {
            stage = "mesh";
            pipeline::run_mesh(cfg, out);
        } else if (render->parsed()) {
            stage = "render";
            pipeline::run_render(cfg, out);
        } else if (eval->parsed()) {
            stage = "eval";
            pipeline::run_eval(cfg, out);
        } else if (pipeline_cmd->parsed()) {
            stage = "pipeline";
            pipeline::run_pipeline(cfg, out);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "stage %s failed: %s\n", stage, e.what());
        return 1;
    }
    return 0;
}
