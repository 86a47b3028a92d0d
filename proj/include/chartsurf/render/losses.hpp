// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/render/raster.hpp"

namespace chartsurf::render {

struct RefineLossWeights {
    double lambda_dssim = 0.2;
    double lambda_struct = 1.0;
    double lambda_dist = 500.0;
    double lambda_normal = 0.25;
    int schedule_iter = 600;  // L_d and L_n join from this iteration on
};

/// (1-lambda) L1 + lambda (1 - SSIM)/2 against the target. Gradients
/// accumulate into up.d_color when with_grad.
double photometric_loss(const RenderOutput& render, std::span<const core::Vec3f> target,
                        double lambda_dssim, RenderGrad* up);

/// Per-pixel sum over ordered fragment pairs of w_i w_j |z_i - z_j| over
/// the retained (front-most K) fragments, mean over all pixels.
double distortion_loss(const RenderOutput& render, RenderGrad* up,
                       double grad_scale = 1.0);

/// Per-pixel depth-map normals (stop-gradient). Pixels with alpha < 0.5 or
/// incomplete neighborhoods are inactive.
struct NormalPrior {
    std::vector<uint8_t> active;
    std::vector<core::Vec3d> np;
};
NormalPrior depth_normal_prior(const RenderOutput& render, const core::Camera& camera);

/// Sum over fragments of w_i (1 - n_i . N_p), where N_p comes from the
/// central-difference gradient of the rendered depth map (stop-gradient,
/// oriented toward the camera). Pixels with alpha < 0.5 are skipped; mean
/// over the remaining pixels. A caller-supplied prior freezes N_p and the
/// contributing set (used by the finite-difference checks).
double normal_consistency_loss(const RenderOutput& render, const core::Camera& camera,
                               std::span<const Surfel> surfels, RenderGrad* up,
                               double grad_scale = 1.0, const NormalPrior* prior = nullptr);

struct RefineLossValue {
    double photo = 0, structure = 0, distortion = 0, normal = 0;
    double total = 0;
};

}  // namespace chartsurf::render
