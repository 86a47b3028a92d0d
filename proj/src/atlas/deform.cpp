// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/atlas/deform.hpp"

#include <cmath>
#include <limits>

#include "chartsurf/core/parallel.hpp"

namespace chartsurf::atlas {

namespace {

constexpr size_t kChunks = 16;

/// Dot product with a fixed 8-lane accumulation order: deterministic and
/// wide enough for the compiler to vectorize without relaxing FP rules.
inline double dot_lanes(const double* a, const double* b, int n) {
    double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    int k = 0;
    for (; k + 8 <= n; k += 8)
        for (int l = 0; l < 8; ++l) s[l] += a[k + l] * b[k + l];
    for (; k < n; ++k) s[0] += a[k] * b[k];
    return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

std::string group_name(int view, const char* suffix) {
    return "c" + std::to_string(view) + "." + suffix;
}

void init_hidden_weights(std::span<double> w1, int hidden, int d, core::Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    for (int j = 0; j < hidden; ++j)
        for (int k = 0; k < d; ++k) w1[static_cast<size_t>(j) * d + k] = rng.uniform(-bound, bound);
}

/// Bilinear tap with the pixel-center convention of chart-resolution maps.
BilinearTap pixel_tap(int w, int h, const core::Vec2d& uv) {
    const double gx = std::clamp(uv.x * w - 0.5, 0.0, static_cast<double>(w - 1));
    const double gy = std::clamp(uv.y * h - 0.5, 0.0, static_cast<double>(h - 1));
    int x0 = std::min(static_cast<int>(gx), w - 2);
    int y0 = std::min(static_cast<int>(gy), h - 2);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    const double fx = std::clamp(gx - x0, 0.0, 1.0);
    const double fy = std::clamp(gy - y0, 0.0, 1.0);
    BilinearTap t;
    t.i00 = y0 * w + x0;
    t.i10 = y0 * w + std::min(x0 + 1, w - 1);
    t.i01 = std::min(y0 + 1, h - 1) * w + x0;
    t.i11 = std::min(y0 + 1, h - 1) * w + std::min(x0 + 1, w - 1);
    t.w00 = (1 - fx) * (1 - fy);
    t.w10 = fx * (1 - fy);
    t.w01 = (1 - fx) * fy;
    t.w11 = fx * fy;
    return t;
}

void gather_feature(const DeformModel& m, std::span<const double> enc, std::span<const double> z,
                    const BilinearTap& et, const DepthTap& zt, double* f) {
    const int d = m.feature_dim;
    const double* e00 = &enc[static_cast<size_t>(et.i00) * d];
    const double* e10 = &enc[static_cast<size_t>(et.i10) * d];
    const double* e01 = &enc[static_cast<size_t>(et.i01) * d];
    const double* e11 = &enc[static_cast<size_t>(et.i11) * d];
    const double* z0 = &z[static_cast<size_t>(zt.b0) * d];
    const double* z1 = &z[static_cast<size_t>(zt.b1) * d];
    for (int k = 0; k < d; ++k)
        f[k] = et.w00 * e00[k] + et.w10 * e10[k] + et.w01 * e01[k] + et.w11 * e11[k] +
               zt.w0 * z0[k] + zt.w1 * z1[k];
}

}  // namespace

DeformModel make_deform_model(const Chart& chart, const DeformConfig& cfg,
                              optim::ParamStore& store, core::Rng& rng) {
    DeformModel m;
    m.mode = DeformModel::Mode::kRay;
    m.feature_dim = cfg.feature_dim;
    m.hidden = cfg.hidden;
    m.bins = cfg.depth_bins;
    m.enc_w = std::max(2, static_cast<int>(std::lround(cfg.encoding_ratio * chart.w)));
    m.enc_h = std::max(2, static_cast<int>(std::lround(cfg.encoding_ratio * chart.h)));

    m.d_min = std::numeric_limits<double>::infinity();
    m.d_max = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < chart.initial_depths.size(); ++i)
        if (chart.valid[i] != 0) {
            m.d_min = std::min(m.d_min, chart.initial_depths[i]);
            m.d_max = std::max(m.d_max, chart.initial_depths[i]);
        }
    if (!(m.d_max > m.d_min)) {
        const double pad = 1e-6 * std::max(1.0, std::fabs(m.d_min));
        m.d_min -= pad;
        m.d_max += pad;
    }

    const int d = m.feature_dim;
    std::vector<double> enc(static_cast<size_t>(m.enc_w) * m.enc_h * d);
    std::vector<double> zbins(static_cast<size_t>(m.bins) * d);
    for (auto& v : enc) v = rng.uniform(-cfg.feature_init, cfg.feature_init);
    for (auto& v : zbins) v = rng.uniform(-cfg.feature_init, cfg.feature_init);
    std::vector<double> w1(static_cast<size_t>(m.hidden) * d);
    init_hidden_weights(w1, m.hidden, d, rng);

    m.g_enc = store.add_group(group_name(chart.view, "enc"), std::move(enc), cfg.lr_deform);
    m.g_z = store.add_group(group_name(chart.view, "zbins"), std::move(zbins), cfg.lr_deform);
    m.g_w1 = store.add_group(group_name(chart.view, "w1"), std::move(w1), cfg.lr_deform);
    m.g_b1 = store.add_group(group_name(chart.view, "b1"),
                             std::vector<double>(m.hidden, 0.0), cfg.lr_deform);
    // Output layer held at 3 x hidden in both modes; ray mode reads row 0.
    m.g_w2 = store.add_group(group_name(chart.view, "w2"),
                             std::vector<double>(3 * static_cast<size_t>(m.hidden), 0.0),
                             cfg.lr_deform);
    m.g_b2 = store.add_group(group_name(chart.view, "b2"), std::vector<double>(3, 0.0),
                             cfg.lr_deform);
    m.g_conf = store.add_group(group_name(chart.view, "conf"),
                               std::vector<double>(chart.initial_points.size(), 0.0),
                               cfg.lr_conf);
    return m;
}

SamplingPlan plan_for_grid(const Chart& chart, const DeformModel& m) {
    SamplingPlan plan;
    const size_t n = chart.initial_points.size();
    plan.enc.resize(n);
    plan.z.resize(n);
    plan.base.resize(n);
    plan.ray.resize(n);
    plan.ok.assign(n, 0);
    for (int y = 0; y < chart.h; ++y)
        for (int x = 0; x < chart.w; ++x) {
            const size_t i = chart.idx(x, y);
            if (chart.valid[i] == 0) continue;
            const auto uv = chart.uv_of_pixel(x, y);
            plan.enc[i] = grid_tap(m.enc_w, m.enc_h, uv.x, uv.y);
            plan.z[i] = depth_tap(m.bins, m.d_min, m.d_max, chart.initial_depths[i]);
            plan.base[i] = chart.initial_points[i];
            plan.ray[i] = chart.ray_dirs[i];
            plan.ok[i] = 1;
        }
    return plan;
}

SamplingPlan plan_for_uvs(const Chart& chart, const DeformModel& m,
                          std::span<const core::Vec2d> uvs) {
    SamplingPlan plan;
    const size_t n = uvs.size();
    plan.enc.resize(n);
    plan.z.resize(n);
    plan.base.assign(n, Vec3d{});
    plan.ray.assign(n, Vec3d{});
    plan.ok.assign(n, 0);
    const Vec3d center = chart.camera.center();
    for (size_t i = 0; i < n; ++i) {
        const BilinearTap pt = pixel_tap(chart.w, chart.h, uvs[i]);
        if (chart.valid[pt.i00] == 0 || chart.valid[pt.i10] == 0 || chart.valid[pt.i01] == 0 ||
            chart.valid[pt.i11] == 0)
            continue;
        const Vec3d base = chart.initial_points[pt.i00] * pt.w00 +
                           chart.initial_points[pt.i10] * pt.w10 +
                           chart.initial_points[pt.i01] * pt.w01 +
                           chart.initial_points[pt.i11] * pt.w11;
        const double depth = chart.initial_depths[pt.i00] * pt.w00 +
                             chart.initial_depths[pt.i10] * pt.w10 +
                             chart.initial_depths[pt.i01] * pt.w01 +
                             chart.initial_depths[pt.i11] * pt.w11;
        plan.enc[i] = grid_tap(m.enc_w, m.enc_h, uvs[i].x, uvs[i].y);
        plan.z[i] = depth_tap(m.bins, m.d_min, m.d_max, depth);
        plan.base[i] = base;
        plan.ray[i] = (base - center).normalized();
        plan.ok[i] = 1;
    }
    return plan;
}

void deform_forward(const DeformModel& m, const optim::ParamStore& store,
                    const SamplingPlan& plan, DeformForward& fwd) {
    const size_t n = plan.size();
    const int d = m.feature_dim, hid = m.hidden, od = m.out_dim();
    fwd.hidden.assign(n * static_cast<size_t>(hid), 0.0);
    fwd.points.assign(n, Vec3d{});
    const auto enc = store.values(m.g_enc);
    const auto z = store.values(m.g_z);
    const auto w1 = store.values(m.g_w1);
    const auto b1 = store.values(m.g_b1);
    const auto w2 = store.values(m.g_w2);
    const auto b2 = store.values(m.g_b2);

    core::parallel_chunks(n, kChunks, [&](size_t, size_t ib, size_t ie) {
        std::vector<double> f(static_cast<size_t>(d));
        for (size_t i = ib; i < ie; ++i) {
            if (plan.ok[i] == 0) {
                fwd.points[i] = plan.base[i];
                continue;
            }
            gather_feature(m, enc, z, plan.enc[i], plan.z[i], f.data());
            double* h = &fwd.hidden[i * static_cast<size_t>(hid)];
            for (int j = 0; j < hid; ++j) {
                const double acc = b1[j] + dot_lanes(&w1[static_cast<size_t>(j) * d], f.data(), d);
                h[j] = acc > 0.0 ? acc : 0.0;
            }
            double out[3] = {0, 0, 0};
            for (int o = 0; o < od; ++o)
                out[o] = b2[o] + dot_lanes(&w2[static_cast<size_t>(o) * hid], h, hid);
            if (m.mode == DeformModel::Mode::kRay)
                fwd.points[i] = plan.base[i] + plan.ray[i] * out[0];
            else
                fwd.points[i] = plan.base[i] + Vec3d{out[0], out[1], out[2]};
        }
    });
}

void deform_backward(const DeformModel& m, optim::ParamStore& store, const SamplingPlan& plan,
                     const DeformForward& fwd, std::span<const Vec3d> d_points) {
    const size_t n = plan.size();
    const int d = m.feature_dim, hid = m.hidden, od = m.out_dim();
    const auto enc = store.values(m.g_enc);
    const auto z = store.values(m.g_z);
    const auto w1 = store.values(m.g_w1);
    const auto w2 = store.values(m.g_w2);

    // Scratch buffers are reused across calls; the backward pass runs one
    // chart at a time.
    static thread_local std::vector<double> w1t;
    static thread_local std::vector<double> df_all;
    static thread_local std::vector<uint8_t> touched;
    static thread_local std::vector<std::vector<double>> locals;
    // Transposed hidden weights for a contiguous df accumulation.
    w1t.resize(static_cast<size_t>(d) * hid);
    for (int j = 0; j < hid; ++j)
        for (int k = 0; k < d; ++k) w1t[static_cast<size_t>(k) * hid + j] = w1[static_cast<size_t>(j) * d + k];

    // Per-sample feature gradients, scattered into enc/z in a fixed-order
    // pass afterwards (keeps results independent of the worker count).
    df_all.resize(n * static_cast<size_t>(d));
    touched.assign(n, 0);

    const size_t dense = static_cast<size_t>(hid) * d + hid + 3 * static_cast<size_t>(hid) + 3;
    locals.resize(kChunks);

    core::parallel_chunks(n, kChunks, [&](size_t c, size_t ib, size_t ie) {
        auto& loc = locals[c];
        loc.assign(dense, 0.0);
        double* lw1 = loc.data();
        double* lb1 = lw1 + static_cast<size_t>(hid) * d;
        double* lw2 = lb1 + hid;
        double* lb2 = lw2 + 3 * static_cast<size_t>(hid);
        std::vector<double> f(static_cast<size_t>(d));
        std::vector<double> dpre(static_cast<size_t>(hid));
        for (size_t i = ib; i < ie; ++i) {
            if (plan.ok[i] == 0) continue;
            const Vec3d g = d_points[i];
            if (g.x == 0 && g.y == 0 && g.z == 0) continue;
            touched[i] = 1;
            double dout[3] = {0, 0, 0};
            if (m.mode == DeformModel::Mode::kRay)
                dout[0] = g.dot(plan.ray[i]);
            else {
                dout[0] = g.x;
                dout[1] = g.y;
                dout[2] = g.z;
            }
            const double* h = &fwd.hidden[i * static_cast<size_t>(hid)];
            for (int o = 0; o < od; ++o) {
                lb2[o] += dout[o];
                double* lrow = &lw2[static_cast<size_t>(o) * hid];
                const double go = dout[o];
                for (int j = 0; j < hid; ++j) lrow[j] += go * h[j];
            }
            for (int j = 0; j < hid; ++j) {
                double acc = 0.0;
                for (int o = 0; o < od; ++o) acc += dout[o] * w2[static_cast<size_t>(o) * hid + j];
                dpre[j] = h[j] > 0.0 ? acc : 0.0;
            }
            gather_feature(m, enc, z, plan.enc[i], plan.z[i], f.data());
            for (int j = 0; j < hid; ++j) {
                const double dj = dpre[j];
                if (dj == 0.0) continue;
                lb1[j] += dj;
                double* lrow = &lw1[static_cast<size_t>(j) * d];
                for (int k = 0; k < d; ++k) lrow[k] += dj * f[k];
            }
            double* df = &df_all[i * static_cast<size_t>(d)];
            for (int k = 0; k < d; ++k)
                df[k] = dot_lanes(&w1t[static_cast<size_t>(k) * hid], dpre.data(), hid);
        }
    });

    // Ordered reduction of the dense gradients.
    auto gw1 = store.grads(m.g_w1);
    auto gb1 = store.grads(m.g_b1);
    auto gw2 = store.grads(m.g_w2);
    auto gb2 = store.grads(m.g_b2);
    for (size_t c = 0; c < kChunks; ++c) {
        if (locals[c].empty()) continue;
        const double* lw1 = locals[c].data();
        const double* lb1 = lw1 + static_cast<size_t>(hid) * d;
        const double* lw2 = lb1 + hid;
        const double* lb2 = lw2 + 3 * static_cast<size_t>(hid);
        for (size_t i = 0; i < static_cast<size_t>(hid) * d; ++i) gw1[i] += lw1[i];
        for (int i = 0; i < hid; ++i) gb1[i] += lb1[i];
        for (size_t i = 0; i < 3 * static_cast<size_t>(hid); ++i) gw2[i] += lw2[i];
        for (int i = 0; i < 3; ++i) gb2[i] += lb2[i];
    }

    // Fixed-order scatter into the feature grids.
    auto genc = store.grads(m.g_enc);
    auto gz = store.grads(m.g_z);
    for (size_t i = 0; i < n; ++i) {
        if (touched[i] == 0) continue;
        const double* df = &df_all[i * static_cast<size_t>(d)];
        const BilinearTap& et = plan.enc[i];
        const DepthTap& zt = plan.z[i];
        double* e00 = &genc[static_cast<size_t>(et.i00) * d];
        double* e10 = &genc[static_cast<size_t>(et.i10) * d];
        double* e01 = &genc[static_cast<size_t>(et.i01) * d];
        double* e11 = &genc[static_cast<size_t>(et.i11) * d];
        double* z0 = &gz[static_cast<size_t>(zt.b0) * d];
        double* z1 = &gz[static_cast<size_t>(zt.b1) * d];
        for (int k = 0; k < d; ++k) {
            const double v = df[k];
            e00[k] += et.w00 * v;
            e10[k] += et.w10 * v;
            e01[k] += et.w01 * v;
            e11[k] += et.w11 * v;
            z0[k] += zt.w0 * v;
            z1[k] += zt.w1 * v;
        }
    }
}

double confidence_at(const DeformModel& m, const optim::ParamStore& store, const Chart& chart,
                     const core::Vec2d& uv, BilinearTap* tap_out) {
    const BilinearTap t = pixel_tap(chart.w, chart.h, uv);
    if (tap_out != nullptr) *tap_out = t;
    const auto logits = store.values(m.g_conf);
    return 1.0 + t.w00 * std::exp(logits[t.i00]) + t.w10 * std::exp(logits[t.i10]) +
           t.w01 * std::exp(logits[t.i01]) + t.w11 * std::exp(logits[t.i11]);
}

void confidence_backward(const DeformModel& m, optim::ParamStore& store, const BilinearTap& t,
                         double d_conf) {
    const auto logits = store.values(m.g_conf);
    auto g = store.grads(m.g_conf);
    g[t.i00] += d_conf * t.w00 * std::exp(logits[t.i00]);
    g[t.i10] += d_conf * t.w10 * std::exp(logits[t.i10]);
    g[t.i01] += d_conf * t.w01 * std::exp(logits[t.i01]);
    g[t.i11] += d_conf * t.w11 * std::exp(logits[t.i11]);
}

void enter_refinement_mode(Chart& chart, DeformModel& m, optim::ParamStore& store,
                           core::Rng& rng) {
    // Bake the current deformation.
    const SamplingPlan plan = plan_for_grid(chart, m);
    DeformForward fwd;
    deform_forward(m, store, plan, fwd);
    for (size_t i = 0; i < chart.initial_points.size(); ++i)
        if (plan.ok[i] != 0) chart.initial_points[i] = fwd.points[i];
    chart.refresh_reference_maps();

    // Refresh the depth-encoding range over the baked depths.
    m.d_min = std::numeric_limits<double>::infinity();
    m.d_max = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < chart.initial_depths.size(); ++i)
        if (chart.valid[i] != 0) {
            m.d_min = std::min(m.d_min, chart.initial_depths[i]);
            m.d_max = std::max(m.d_max, chart.initial_depths[i]);
        }
    if (!(m.d_max > m.d_min)) {
        const double pad = 1e-6 * std::max(1.0, std::fabs(m.d_min));
        m.d_min -= pad;
        m.d_max += pad;
    }

    // Reinitialize the MLP with a zeroed 3-channel output layer.
    auto w1 = store.values(m.g_w1);
    init_hidden_weights(w1, m.hidden, m.feature_dim, rng);
    auto b1 = store.values(m.g_b1);
    std::fill(b1.begin(), b1.end(), 0.0);
    auto w2 = store.values(m.g_w2);
    std::fill(w2.begin(), w2.end(), 0.0);
    auto b2 = store.values(m.g_b2);
    std::fill(b2.begin(), b2.end(), 0.0);
    m.mode = DeformModel::Mode::kFree;
}

}  // namespace chartsurf::atlas
