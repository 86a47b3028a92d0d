// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/atlas/checkpoint.hpp"
#include "chartsurf/metrics/metrics.hpp"
#include "chartsurf/pipeline/config.hpp"

namespace chartsurf::pipeline {

namespace fs = std::filesystem;

/// Stage entry points shared by the CLI and the acceptance suite. Each
/// reads/writes the documented bundle, checkpoint and report formats under
/// `out`; timings go to stderr only, so every written artifact is
/// reproducible byte for byte.
void run_synth(const Config& cfg, const fs::path& out);
void run_align(const Config& cfg, const fs::path& out);
void run_refine(const Config& cfg, const fs::path& out);
void run_free_stage(const Config& cfg, const fs::path& out);
void run_mesh(const Config& cfg, const fs::path& out);
void run_render(const Config& cfg, const fs::path& out);
metrics::EvalReport run_eval(const Config& cfg, const fs::path& out);

/// synth -> align -> refine -> (free stage) -> mesh -> render -> eval.
metrics::EvalReport run_pipeline(const Config& cfg, const fs::path& out);

/// Loads the newest checkpoint of the given stage chain and rebuilds the
/// free-surfel bookkeeping when free parameters are present.
struct LoadedState {
    atlas::AtlasState atlas;
    bool has_free = false;
    render::FreeSurfelModel free_model;
};
LoadedState load_state(const fs::path& checkpoint);

/// Depth maps of the final representation rendered at training resolution,
/// plus the surfel samples (centers, normals, radii) used for dilation.
struct MeshingInputs {
    std::vector<core::DepthMap> depths;
    std::vector<core::Camera> cameras;
    std::vector<core::Vec3d> positions, normals;
    std::vector<double> radii;
    double diameter = 0.0;
};
MeshingInputs gather_meshing_inputs(LoadedState& state, const scene::SceneBundle& bundle);

core::TriangleMesh extract_mesh(const Config& cfg, const MeshingInputs& inputs);

}  // namespace chartsurf::pipeline
