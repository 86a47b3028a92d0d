// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include "chartsurf/render/surfel.hpp"

namespace chartsurf::render {

using core::Camera;

/// One ray-surfel intersection, front-to-back per pixel.
struct RasterFragment {
    int surfel = -1;
    double a = 0, b = 0;    // intersection in the (tu, tv) basis
    double t = 0;           // camera depth of the intersection
    double g = 0;           // exp(-(a^2+b^2)/2)
    double alpha = 0;       // opacity * g
    double omega = 0;       // blending weight
};

struct RenderOutput {
    int width = 0, height = 0;
    core::Vec3d background{};
    std::vector<core::Vec3d> color;   // per pixel
    std::vector<double> alpha;        // sum of omegas
    std::vector<double> depth;        // sum(omega z) / max(alpha, 1e-8)
    std::vector<core::Vec3d> normal;  // normalized sum(omega n); zero if empty

    std::vector<RasterFragment> fragments;  // sorted by (t, surfel) per pixel
    std::vector<uint32_t> frag_begin;       // size w*h+1
    int loss_fragments = 16;                // K front-most retained for losses

    size_t pixel(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    /// Number of fragments of a pixel visible to the loss terms (<= K).
    int loss_count(size_t px) const {
        const int n = static_cast<int>(frag_begin[px + 1] - frag_begin[px]);
        return n < loss_fragments ? n : loss_fragments;
    }
};

/// Perspective-correct ray-splat rasterization with alpha compositing.
/// Fragment order is by intersection depth with ties broken by surfel
/// index, so results are independent of submission order. The Gaussian is
/// cut off at 3 sigma (a^2 + b^2 > 9).
RenderOutput rasterize(std::span<const Surfel> surfels, const Camera& camera,
                       const core::Vec3d& background, int loss_fragments = 16);

/// Upstream gradients for rasterize_backward. Dense per-pixel heads plus
/// per-fragment heads (first loss_fragments per pixel, indexed like
/// RenderOutput::fragments).
struct RenderGrad {
    std::vector<core::Vec3d> d_color;
    std::vector<double> d_alpha;
    std::vector<double> d_depth;
    std::vector<core::Vec3d> d_normal;
    std::vector<double> d_frag_omega;
    std::vector<double> d_frag_z;
    std::vector<core::Vec3d> d_frag_normal;

    void resize(const RenderOutput& r);
};

/// Analytic backward pass; accumulates into `grads`.
void rasterize_backward(std::span<const Surfel> surfels, const Camera& camera,
                        const RenderOutput& render, const RenderGrad& upstream,
                        SurfelGrads& grads);

/// Little-endian fragment dump: per pixel a uint32 count followed by
/// (omega, z, nx, ny, nz) float32 tuples, front to back (loss fragments).
void write_fragment_dump(std::span<const Surfel> surfels, const RenderOutput& render,
                         const std::filesystem::path& path);

}  // namespace chartsurf::render
