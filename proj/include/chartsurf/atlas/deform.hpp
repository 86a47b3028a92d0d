// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/atlas/chart.hpp"
#include "chartsurf/atlas/encoding.hpp"
#include "chartsurf/core/rng.hpp"
#include "chartsurf/optim/param_store.hpp"

namespace chartsurf::atlas {

/// The learnable deformation of one chart: a sparse 2D feature grid, a
/// depth-encoding table, and a one-hidden-layer MLP. In ray mode the MLP's
/// scalar output displaces points along their pixel rays; in free mode a
/// 3-vector output is used directly. The output layer starts at zero, so
/// optimization begins from the undeformed chart.
struct DeformModel {
    enum class Mode { kRay, kFree };

    Mode mode = Mode::kRay;
    int feature_dim = 32;  // d
    int hidden = 64;
    int bins = 32;         // depth-encoding table size B
    int enc_w = 2, enc_h = 2;
    double d_min = 0.0, d_max = 1.0;

    // Parameter group indices in the owning store. The output layer is
    // allocated at 3x hidden; ray mode reads row 0 only.
    size_t g_enc = 0, g_z = 0, g_w1 = 0, g_b1 = 0, g_w2 = 0, g_b2 = 0, g_conf = 0;

    int out_dim() const { return mode == Mode::kRay ? 1 : 3; }
};

struct DeformConfig {
    double encoding_ratio = 0.4;  // r; grid dims = max(2, round(r * chart dims))
    int feature_dim = 32;
    int hidden = 64;
    int depth_bins = 32;
    double feature_init = 0.1;  // features ~ U(-x, x)
    double lr_deform = 1e-3;
    double lr_conf = 1e-2;
};

/// Registers all parameter groups for one chart ("c{view}." prefix) and
/// returns the model descriptor. Hidden weights use uniform fan-in init.
DeformModel make_deform_model(const Chart& chart, const DeformConfig& cfg,
                              optim::ParamStore& store, core::Rng& rng);

/// Fixed per-sample taps, computed once per chart grid (or per query set).
struct SamplingPlan {
    std::vector<BilinearTap> enc;
    std::vector<DepthTap> z;
    std::vector<Vec3d> base;   // psi0 at the sample
    std::vector<Vec3d> ray;    // unit ray at the sample
    std::vector<uint8_t> ok;   // inside the valid region
    size_t size() const { return enc.size(); }
};

/// Plan for every chart pixel (skips invalid ones, ok=0).
SamplingPlan plan_for_grid(const Chart& chart, const DeformModel& m);

/// Plan for arbitrary UV queries; ok=0 when any bilinear tap of psi0 hits
/// an invalid pixel.
SamplingPlan plan_for_uvs(const Chart& chart, const DeformModel& m,
                          std::span<const core::Vec2d> uvs);

/// Forward state kept for the backward pass.
struct DeformForward {
    std::vector<double> hidden;  // n * hidden, post-ReLU
    std::vector<Vec3d> points;   // deformed psi; = psi0 where ok=0
};

void deform_forward(const DeformModel& m, const optim::ParamStore& store,
                    const SamplingPlan& plan, DeformForward& fwd);

/// Accumulates parameter gradients for dL/dpsi at each plan sample.
void deform_backward(const DeformModel& m, optim::ParamStore& store, const SamplingPlan& plan,
                     const DeformForward& fwd, std::span<const Vec3d> d_points);

/// Confidence C = 1 + exp(conf_logits), bilinearly sampled at UV (pixel-center
/// convention). Returns the sampled value; `taps` may be reused for backward.
double confidence_at(const DeformModel& m, const optim::ParamStore& store, const Chart& chart,
                     const core::Vec2d& uv, BilinearTap* tap_out = nullptr);
void confidence_backward(const DeformModel& m, optim::ParamStore& store,
                         const BilinearTap& tap, double d_conf);

/// Bakes the current deformation into the chart, reinitializes the MLP, and
/// switches the output layer to 3 channels (free mode). Reference maps and
/// the depth-encoding range are refreshed from the baked chart.
void enter_refinement_mode(Chart& chart, DeformModel& m, optim::ParamStore& store,
                           core::Rng& rng);

}  // namespace chartsurf::atlas
