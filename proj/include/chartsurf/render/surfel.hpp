// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/atlas/atlas.hpp"

namespace chartsurf::render {

using atlas::AtlasState;
using core::Vec3d;

/// A flat 2D Gaussian. tu/tv span the 1-sigma extents; the normal is the
/// oriented unit cross product.
struct Surfel {
    Vec3d center;
    Vec3d tu, tv;
    Vec3d normal;
    double orient_sign = 1.0;  // normal = orient_sign * normalize(tu x tv)
    Vec3d color;
    double opacity = 1.0;
    int chart = -1, px = -1, py = -1;  // source pixel; -1 for hand-built surfels
};

struct SurfelSet {
    std::vector<Surfel> surfels;
    int skipped = 0;  // masked or degenerate interior pixels
    /// chart_begin[c] .. chart_begin[c+1] indexes chart c's surfels.
    std::vector<int> chart_begin;
};

/// One surfel per interior chart pixel whose 5-point stencil is valid.
/// Tangents are half the central-difference steps, so adjacent surfels
/// overlap at one sigma. Colors and opacities are tied to the textures at
/// the source pixel. `fwd` must hold the charts' current deformed grids.
SurfelSet instantiate_surfels(const AtlasState& atlas,
                              const std::vector<atlas::DeformForward>& fwd);

struct SurfelGrads {
    std::vector<Vec3d> d_center, d_tu, d_tv, d_color;
    std::vector<double> d_opacity;
    void resize(size_t n);
};

/// Adjoint of instantiate_surfels: scatters surfel gradients into per-chart
/// point gradients (d_points[c], chart-grid sized) and texture gradients in
/// the store.
void instantiate_backward(const AtlasState& atlas, const SurfelSet& set,
                          const SurfelGrads& grads, std::vector<std::vector<Vec3d>>& d_points,
                          optim::ParamStore& store);

// ---------------------------------------------------------------------------
// Free-surfel stage parameters: position, log scales, rotation quaternion.

struct FreeSurfelModel {
    size_t g_center = 0, g_logscale = 0, g_quat = 0;
    int count = 0;
    /// Source pixel bookkeeping copied from the instantiation.
    std::vector<int> chart, px, py;
    std::vector<double> orient_sign;
};

/// Registers free parameters initialized from `set` (tangents orthogonalized
/// into scale + rotation).
FreeSurfelModel make_free_surfels(const SurfelSet& set, optim::ParamStore& store, double lr);

/// Builds surfels from the free parameters; colors/opacities stay tied to
/// the textures at the source pixels.
SurfelSet free_surfels_forward(const AtlasState& atlas, const FreeSurfelModel& m,
                               const optim::ParamStore& store);

/// Adjoint: surfel gradients to center/log-scale/quaternion and textures.
void free_surfels_backward(const AtlasState& atlas, const FreeSurfelModel& m,
                           const SurfelSet& set, const SurfelGrads& grads,
                           optim::ParamStore& store);

}  // namespace chartsurf::render
