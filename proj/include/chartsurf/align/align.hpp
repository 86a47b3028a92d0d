// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/align/losses.hpp"

namespace chartsurf::align {

struct AlignRecord {
    int iter = 0;
    double fit = 0, structure = 0, align = 0, total = 0;
};

struct AlignReport {
    std::vector<AlignRecord> records;
    double wall_seconds = 0.0;
    double conf_mean = 0.0, conf_median = 0.0;
};

struct AlignConfig {
    AlignLossWeights weights;
    int iters = 1000;
    double pair_sample_fraction = 0.25;
    double grad_clip = 10.0;
    uint64_t seed = 1;
};

/// Stage-1 optimization: Adam on deformation parameters and confidence
/// logits, total = fit + lambda_struct * struct + lambda_align * align.
/// Throws Error naming the offending term when the loss goes non-finite.
AlignReport run_alignment(AtlasState& atlas, const scene::SceneBundle& bundle,
                          const AlignConfig& cfg);

/// One full evaluation of the stage-1 losses (full-grid pair sampling, no
/// update). Gradients are accumulated when with_grad; useful for tests and
/// for the refinement-stage coherence guard.
struct AlignEval {
    double fit = 0, structure = 0, align = 0, total = 0;
};
AlignEval evaluate_alignment_losses(AtlasState& atlas, const std::vector<FitObs>& obs,
                                    const AlignLossWeights& weights, bool with_grad,
                                    bool symmetric_align = false, uint64_t align_seed = 0,
                                    double pair_fraction = 1.0,
                                    const std::vector<SamplingPlan>* cached_plans = nullptr);

}  // namespace chartsurf::align
