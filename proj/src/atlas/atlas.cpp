// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/atlas/atlas.hpp"

#include <cmath>

namespace chartsurf::atlas {

AtlasState build_atlas(const scene::SceneBundle& bundle, const AtlasBuildConfig& cfg) {
    AtlasState atlas;
    core::Rng rng(cfg.seed ^ 0xA71A5);
    DeformConfig dcfg = cfg.deform;
    if (cfg.encoding_ratio_override > 0.0)
        dcfg.encoding_ratio = cfg.encoding_ratio_override;
    else
        dcfg.encoding_ratio = bundle.n_views() <= 3 ? 0.1 : 0.4;

    for (int i = 0; i < bundle.n_views(); ++i) {
        Chart chart = init_chart(bundle.depths[i], bundle.cameras[i], i, cfg.max_side);

        // Gather this view's SfM observations as (UV, world position).
        std::vector<std::pair<core::Vec2d, Vec3d>> obs;
        const double iw = bundle.cameras[i].width(), ih = bundle.cameras[i].height();
        for (const auto& p : bundle.sfm_points)
            for (const auto& o : p.observations)
                if (o.view == i) obs.push_back({core::Vec2d{o.u / iw, o.v / ih}, p.position});
        affine_prealign(chart, obs);

        core::Rng chart_rng = rng.fork(static_cast<uint64_t>(i));
        atlas.models.push_back(make_deform_model(chart, dcfg, atlas.store, chart_rng));
        atlas.charts.push_back(std::move(chart));
        atlas.textures.push_back(TextureGroups{});
    }
    return atlas;
}

void add_textures(AtlasState& atlas, const scene::SceneBundle& bundle, double opacity_logit_init,
                  double lr_color, double lr_opacity) {
    for (int i = 0; i < atlas.n_charts(); ++i) {
        if (atlas.textures[i].present) continue;
        const Chart& chart = atlas.charts[i];
        const auto& img = bundle.images[i];
        std::vector<double> color(static_cast<size_t>(chart.w) * chart.h * 3, 0.0);
        for (int y = 0; y < chart.h; ++y)
            for (int x = 0; x < chart.w; ++x) {
                // Sample the source image at the matching pixel center.
                const double sx = (x + 0.5) * img.width() / chart.w - 0.5;
                const double sy = (y + 0.5) * img.height() / chart.h - 0.5;
                const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, img.width() - 1);
                const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, img.height() - 1);
                const int x1 = std::min(x0 + 1, img.width() - 1);
                const int y1 = std::min(y0 + 1, img.height() - 1);
                const double fx = std::clamp(sx - x0, 0.0, 1.0);
                const double fy = std::clamp(sy - y0, 0.0, 1.0);
                const auto lerp = [&](auto get) {
                    return (1 - fy) * ((1 - fx) * get(x0, y0) + fx * get(x1, y0)) +
                           fy * ((1 - fx) * get(x0, y1) + fx * get(x1, y1));
                };
                const size_t o = (chart.idx(x, y)) * 3;
                color[o + 0] = lerp([&](int a, int b) { return img.at(a, b).x; });
                color[o + 1] = lerp([&](int a, int b) { return img.at(a, b).y; });
                color[o + 2] = lerp([&](int a, int b) { return img.at(a, b).z; });
            }
        TextureGroups tex;
        tex.g_color = atlas.store.add_group("tex" + std::to_string(i) + ".color",
                                            std::move(color), lr_color);
        tex.g_opacity = atlas.store.add_group(
            "tex" + std::to_string(i) + ".opacity",
            std::vector<double>(static_cast<size_t>(chart.w) * chart.h, opacity_logit_init),
            lr_opacity);
        tex.present = true;
        atlas.textures[i] = tex;
    }
}

}  // namespace chartsurf::atlas
