// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/atlas/atlas.hpp"

namespace chartsurf::align {

using atlas::AtlasState;
using atlas::DeformForward;
using atlas::SamplingPlan;
using core::Vec3d;

struct AlignLossWeights {
    double lambda_struct = 4.0;
    double lambda_align = 5.0;
    double alpha = 0.2;  // confidence regularizer
    double tau = 0.0;    // attraction clamp, world units (callers default to 1% of diameter)
};

/// Per-chart SfM observation data, built once per run.
struct FitObs {
    SamplingPlan plan;                     // deformation plan at the observation UVs
    std::vector<Vec3d> targets;            // SfM world positions
    std::vector<atlas::BilinearTap> conf_taps;
};
std::vector<FitObs> build_fit_observations(const AtlasState& atlas,
                                           const scene::SceneBundle& bundle);

/// Eq.-style fitting loss: (1/n) sum_i sum_k C_i(u_ik) |psi_i(u_ik) - p_ik|_1
/// - alpha * sum_i mean(log C_i). When with_grad, parameter gradients are
/// accumulated into the store.
double fitting_loss(AtlasState& atlas, const std::vector<FitObs>& obs, double alpha,
                    bool with_grad);

/// Structure loss of one chart: mean(1 - N.N0) + 1/4 mean(|M - M0|) over
/// pixels that are valid and non-degenerate in both the reference and the
/// current geometry. `geom` must come from the chart's current deformed
/// points; d_points receives the adjoint when non-null.
double structure_loss(const atlas::Chart& chart, const atlas::GridGeometry& geom,
                      std::span<const Vec3d> points, std::span<Vec3d> d_points,
                      double scale = 1.0,
                      std::span<const double> pixel_weights = {});

struct MutualAlignOptions {
    double tau = 0.01;
    double sample_fraction = 1.0;  // per ordered pair, reseeded per call
    uint64_t seed = 0;
    bool symmetric = false;  // full gradients through the target chart
};

/// Clamped L1 attraction between overlapping charts, mean over contributing
/// samples (ordered pairs i != j). Out-of-view or behind-camera projections
/// contribute nothing. With symmetric=false the target surface is a frozen
/// constant (one-sided attraction); with symmetric=true gradients also flow
/// into the target chart and through the projected pixel.
double mutual_alignment_loss(AtlasState& atlas, const std::vector<DeformForward>& fwd,
                             const std::vector<SamplingPlan>& plans,
                             const MutualAlignOptions& opt,
                             std::vector<std::vector<Vec3d>>* d_points);

}  // namespace chartsurf::align
