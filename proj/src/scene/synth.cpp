// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/scene/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "chartsurf/core/rng.hpp"

namespace chartsurf::scene {

using core::Camera;
using core::Rng;
using core::Vec3d;

void SceneBundle::validate() const {
    CHARTSURF_CHECK_MSG(cameras.size() == images.size() && cameras.size() == depths.size(),
                        "bundle list lengths differ");
    for (size_t i = 0; i < cameras.size(); ++i) {
        CHARTSURF_CHECK_MSG(images[i].width() == cameras[i].width() &&
                                images[i].height() == cameras[i].height(),
                            "image " << i << " size mismatch");
        CHARTSURF_CHECK_MSG(depths[i].width() == cameras[i].width() &&
                                depths[i].height() == cameras[i].height(),
                            "depth " << i << " size mismatch");
    }
    for (size_t k = 0; k < sfm_points.size(); ++k) {
        const auto& p = sfm_points[k];
        CHARTSURF_CHECK_MSG(!p.observations.empty(), "sfm point " << k << " has no observations");
        CHARTSURF_CHECK_MSG(p.position.all_finite(), "sfm point " << k << " not finite");
        for (const auto& o : p.observations) {
            CHARTSURF_CHECK_MSG(o.view >= 0 && o.view < n_views(),
                                "sfm point " << k << " references view " << o.view);
            CHARTSURF_CHECK_MSG(o.u >= 0 && o.u <= cameras[o.view].width() && o.v >= 0 &&
                                    o.v <= cameras[o.view].height(),
                                "sfm point " << k << " observation outside image bounds");
        }
    }
}

double SceneBundle::scene_diameter() const {
    std::vector<Vec3d> pts;
    for (int i = 0; i < n_views(); ++i) {
        const auto& d = depths[i];
        for (int y = 0; y < d.height(); y += 4)
            for (int x = 0; x < d.width(); x += 4)
                if (d.at(x, y) > 0.f)
                    pts.push_back(core::backproject_pixel(cameras[i], x + 0.5, y + 0.5, d.at(x, y)));
    }
    return core::bounding_diameter(pts);
}

core::DepthMap corrupt_depth(const core::DepthMap& clean, const core::IdMap& object_id,
                             const CorruptionSpec& spec, int view_index) {
    spec.validate();
    CHARTSURF_CHECK_MSG(object_id.width() == clean.width() && object_id.height() == clean.height(),
                        "object id map misaligned with depth");
    Rng view_rng = Rng(spec.seed).fork(0x5CEE + static_cast<uint64_t>(view_index));

    // Per-object scales: ids are drawn in ascending order so the draw for
    // object k does not depend on which objects happen to be visible.
    int max_id = -1;
    for (size_t i = 0; i < object_id.size(); ++i) max_id = std::max(max_id, object_id[i]);
    std::vector<double> scale(static_cast<size_t>(max_id + 1), 1.0);
    Rng obj_rng = view_rng.fork(1);
    for (int k = 0; k <= max_id; ++k) {
        const double s = obj_rng.uniform(spec.object_scale_min, spec.object_scale_max);
        scale[k] = k < static_cast<int>(spec.fixed_object_scales.size())
                       ? spec.fixed_object_scales[k]
                       : s;
    }
    Rng affine_rng = view_rng.fork(2);
    const double a = affine_rng.uniform(spec.view_scale_min, spec.view_scale_max);
    const double b = spec.view_offset_max > 0.0
                         ? affine_rng.uniform(-spec.view_offset_max, spec.view_offset_max)
                         : 0.0;
    Rng noise_rng = view_rng.fork(3);

    core::DepthMap out(clean.width(), clean.height(), 0.f);
    for (int y = 0; y < clean.height(); ++y)
        for (int x = 0; x < clean.width(); ++x) {
            const float d = clean.at(x, y);
            const double eta =
                spec.pixel_noise > 0.0 ? noise_rng.uniform(-spec.pixel_noise, spec.pixel_noise)
                                       : 0.0;
            if (d <= 0.f) continue;
            const int id = object_id.at(x, y);
            const double s = id >= 0 ? scale[id] : 1.0;
            const double corrupted = (a * s * d + b) * (1.0 + eta);
            out.at(x, y) = corrupted > 0.0 ? static_cast<float>(corrupted) : 0.f;
        }
    return out;
}

std::vector<SfmPoint> sample_sfm_points(const std::vector<core::DepthMap>& clean_depths,
                                        const std::vector<Camera>& cameras, int count,
                                        const CorruptionSpec& spec, double scene_diameter,
                                        std::vector<bool>* outlier_mask) {
    CHARTSURF_CHECK_MSG(count >= 1, "sfm point count");
    CHARTSURF_CHECK(clean_depths.size() == cameras.size());
    const int n = static_cast<int>(cameras.size());
    Rng rng = Rng(spec.seed).fork(0x5F);

    std::vector<SfmPoint> points;
    points.reserve(static_cast<size_t>(count));
    const uint64_t max_attempts = static_cast<uint64_t>(count) * 4000 + 10000;
    for (uint64_t attempt = 0; attempt < max_attempts && points.size() < size_t(count); ++attempt) {
        const int view = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
        const auto& depth = clean_depths[view];
        const int px = static_cast<int>(rng.below(static_cast<uint64_t>(depth.width())));
        const int py = static_cast<int>(rng.below(static_cast<uint64_t>(depth.height())));
        const float d = depth.at(px, py);
        if (d <= 0.f) continue;
        const Vec3d p = core::backproject_pixel(cameras[view], px + 0.5, py + 0.5, d);

        SfmPoint pt;
        pt.position = p;
        for (int j = 0; j < n; ++j) {
            const auto pr = core::project_point(cameras[j], p);
            if (pr.behind) continue;
            if (pr.u < 0.0 || pr.v < 0.0 || pr.u >= clean_depths[j].width() ||
                pr.v >= clean_depths[j].height())
                continue;
            const int qx = static_cast<int>(pr.u), qy = static_cast<int>(pr.v);
            const float dj = clean_depths[j].at(qx, qy);
            if (dj <= 0.f) continue;
            if (std::fabs(pr.z - dj) <= 0.01 * dj)
                pt.observations.push_back({j, pr.u, pr.v});
        }
        const size_t need = n >= 2 ? 2 : 1;
        if (pt.observations.size() >= need) points.push_back(std::move(pt));
    }
    CHARTSURF_CHECK_MSG(points.size() == size_t(count),
                        "sfm sampling found only " << points.size() << " of " << count
                                                   << " multi-view-consistent points");

    // Exact outlier count, fixed by the seed: displace a deterministic
    // random subset, keeping observations untouched.
    const int n_outliers = static_cast<int>(std::llround(spec.sfm_outlier_fraction * count));
    std::vector<int> order(points.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng shuffle_rng = Rng(spec.seed).fork(0xA11);
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    if (outlier_mask != nullptr) outlier_mask->assign(points.size(), false);
    Rng disp_rng = Rng(spec.seed).fork(0xD15);
    for (int k = 0; k < n_outliers; ++k) {
        const int idx = order[k];
        points[idx].position += disp_rng.uniform_in_unit_ball() * (0.1 * scene_diameter);
        if (outlier_mask != nullptr) (*outlier_mask)[idx] = true;
    }
    return points;
}

void generate_scene(const SceneSpec& scene, const CorruptionSpec& corruption, int sfm_count,
                    SceneBundle& bundle, GroundTruth& gt) {
    scene.validate();
    corruption.validate();
    bundle = SceneBundle{};
    gt = GroundTruth{};
    gt.mesh = tessellate(scene);
    for (const auto& cam : scene.cameras) {
        ViewRender r = render_view(scene, cam);
        bundle.cameras.push_back(cam);
        bundle.images.push_back(std::move(r.color));
        gt.clean_depths.push_back(std::move(r.depth));
        gt.object_ids.push_back(std::move(r.object_id));
    }
    Vec3d lo, hi;
    gt.mesh.bounds(lo, hi);
    gt.diameter = (hi - lo).norm();

    for (int i = 0; i < static_cast<int>(scene.cameras.size()); ++i)
        bundle.depths.push_back(corrupt_depth(gt.clean_depths[i], gt.object_ids[i], corruption, i));

    bundle.sfm_points = sample_sfm_points(gt.clean_depths, bundle.cameras, sfm_count, corruption,
                                          gt.diameter, &gt.sfm_outlier_mask);

    for (const auto& cam : scene.test_cameras) {
        ViewRender r = render_view(scene, cam);
        gt.test_cameras.push_back(cam);
        gt.test_images.push_back(std::move(r.color));
    }
    bundle.validate();
}

}  // namespace chartsurf::scene
