// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>

#include "chartsurf/core/image.hpp"
#include "chartsurf/core/mesh.hpp"

namespace chartsurf::metrics {

using core::Vec3d;

/// Symmetric mean nearest-neighbor distance, exact (grid-accelerated).
double chamfer_distance(std::span<const Vec3d> pred, std::span<const Vec3d> gt);

/// Exact brute-force O(n^2) reference.
double chamfer_distance_bruteforce(std::span<const Vec3d> pred, std::span<const Vec3d> gt);

/// Uniform-area mesh sampling with a fixed seed.
std::vector<Vec3d> sample_mesh_surface(const core::TriangleMesh& mesh, int count,
                                       uint64_t seed = 17);

/// F = 2PR/(P+R) of surface samples within `threshold`; 0 when both empty
/// precision and recall vanish. Empty meshes score 0 with a warning.
double f_score(const core::TriangleMesh& pred, const core::TriangleMesh& gt, double threshold,
               int samples = 100000, uint64_t seed = 17);

/// -10 log10(MSE) over [0,1] images; +infinity for identical images.
double psnr(const core::ColorImage& a, const core::ColorImage& b);

/// Renderer-convention SSIM (window 11, sigma 1.5, K1=0.01, K2=0.03).
double ssim_metric(const core::ColorImage& a, const core::ColorImage& b);

/// Linear-interpolation quantile of an unsorted list (q in (0,1)).
double quantile(std::vector<double> values, double q);

struct EvalReport {
    double chamfer = 0.0;
    double f_score = 0.0;
    double f_score_threshold = 0.0;
    std::vector<double> psnr_per_view;
    double mean_psnr = 0.0;
    double q10_psnr = 0.0;
    double ssim_mean = 0.0;

    void write_json(const std::filesystem::path& path) const;
};

}  // namespace chartsurf::metrics
