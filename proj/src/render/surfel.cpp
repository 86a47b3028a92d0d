// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/render/surfel.hpp"

#include <cmath>

namespace chartsurf::render {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void SurfelGrads::resize(size_t n) {
    d_center.assign(n, Vec3d{});
    d_tu.assign(n, Vec3d{});
    d_tv.assign(n, Vec3d{});
    d_color.assign(n, Vec3d{});
    d_opacity.assign(n, 0.0);
}

SurfelSet instantiate_surfels(const AtlasState& atlas,
                              const std::vector<atlas::DeformForward>& fwd) {
    SurfelSet set;
    set.chart_begin.push_back(0);
    for (int c = 0; c < atlas.n_charts(); ++c) {
        const auto& chart = atlas.charts[c];
        CHARTSURF_CHECK_MSG(atlas.textures[c].present, "chart " << c << " has no textures");
        const auto color_tex = atlas.store.values(atlas.textures[c].g_color);
        const auto op_tex = atlas.store.values(atlas.textures[c].g_opacity);
        const Vec3d cam_center = chart.camera.center();
        const auto& pts = fwd[c].points;
        for (int y = 1; y < chart.h - 1; ++y)
            for (int x = 1; x < chart.w - 1; ++x) {
                const size_t i = chart.idx(x, y);
                if (chart.valid[i] == 0 || !chart.is_valid(x - 1, y) ||
                    !chart.is_valid(x + 1, y) || !chart.is_valid(x, y - 1) ||
                    !chart.is_valid(x, y + 1)) {
                    ++set.skipped;
                    continue;
                }
                Surfel s;
                s.center = pts[i];
                s.tu = (pts[chart.idx(x + 1, y)] - pts[chart.idx(x - 1, y)]) * 0.25;
                s.tv = (pts[chart.idx(x, y + 1)] - pts[chart.idx(x, y - 1)]) * 0.25;
                const Vec3d cr = s.tu.cross(s.tv);
                const double len = cr.norm();
                if (len < 1e-14 * (s.tu.norm() * s.tv.norm() + 1e-300)) {
                    ++set.skipped;
                    continue;
                }
                Vec3d n = cr / len;
                s.orient_sign = 1.0;
                if (n.dot(cam_center - s.center) < 0.0) {
                    n = -n;
                    s.orient_sign = -1.0;
                }
                s.normal = n;
                const size_t ti = i * 3;
                auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
                s.color = Vec3d{clamp01(color_tex[ti]), clamp01(color_tex[ti + 1]),
                                clamp01(color_tex[ti + 2])};
                s.opacity = sigmoid(op_tex[i]);
                s.chart = c;
                s.px = x;
                s.py = y;
                set.surfels.push_back(s);
            }
        set.chart_begin.push_back(static_cast<int>(set.surfels.size()));
    }
    return set;
}

void instantiate_backward(const AtlasState& atlas, const SurfelSet& set,
                          const SurfelGrads& grads, std::vector<std::vector<Vec3d>>& d_points,
                          optim::ParamStore& store) {
    for (size_t s = 0; s < set.surfels.size(); ++s) {
        const Surfel& sf = set.surfels[s];
        const auto& chart = atlas.charts[sf.chart];
        auto& dp = d_points[sf.chart];
        dp[chart.idx(sf.px, sf.py)] += grads.d_center[s];
        dp[chart.idx(sf.px + 1, sf.py)] += grads.d_tu[s] * 0.25;
        dp[chart.idx(sf.px - 1, sf.py)] -= grads.d_tu[s] * 0.25;
        dp[chart.idx(sf.px, sf.py + 1)] += grads.d_tv[s] * 0.25;
        dp[chart.idx(sf.px, sf.py - 1)] -= grads.d_tv[s] * 0.25;

        const auto color_tex = store.values(atlas.textures[sf.chart].g_color);
        auto g_color = store.grads(atlas.textures[sf.chart].g_color);
        auto g_op = store.grads(atlas.textures[sf.chart].g_opacity);
        const size_t i = chart.idx(sf.px, sf.py);
        for (int ch = 0; ch < 3; ++ch) {
            const double v = color_tex[i * 3 + ch];
            if (v > 0.0 && v < 1.0) g_color[i * 3 + ch] += grads.d_color[s][ch];
        }
        g_op[i] += grads.d_opacity[s] * sf.opacity * (1.0 - sf.opacity);
    }
}

namespace {

Vec3d rot_col1(const double q[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)};
}
Vec3d rot_col2(const double q[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    return {2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)};
}

// d(col)/d(q_hat): 3x4 Jacobians.
void rot_col1_jac(const double q[4], Vec3d jac[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    jac[0] = {0, 2 * z, -2 * y};
    jac[1] = {0, 2 * y, 2 * z};
    jac[2] = {-4 * y, 2 * x, -2 * w};
    jac[3] = {-4 * z, 2 * w, 2 * x};
}
void rot_col2_jac(const double q[4], Vec3d jac[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    jac[0] = {-2 * z, 0, 2 * x};
    jac[1] = {2 * y, -4 * x, 2 * w};
    jac[2] = {2 * x, 0, 2 * z};
    jac[3] = {-2 * w, -4 * z, 2 * y};
}

}  // namespace

FreeSurfelModel make_free_surfels(const SurfelSet& set, optim::ParamStore& store, double lr) {
    FreeSurfelModel m;
    m.count = static_cast<int>(set.surfels.size());
    std::vector<double> centers, logscales, quats;
    centers.reserve(3 * m.count);
    logscales.reserve(2 * m.count);
    quats.reserve(4 * m.count);
    for (const auto& s : set.surfels) {
        const Vec3d e1 = s.tu.normalized();
        const Vec3d n = s.tu.cross(s.tv).normalized();
        const Vec3d e2 = n.cross(e1);
        const double su = std::max(s.tu.norm(), 1e-12);
        const double sv = std::max(s.tv.dot(e2), 1e-12);
        centers.insert(centers.end(), {s.center.x, s.center.y, s.center.z});
        logscales.insert(logscales.end(), {std::log(su), std::log(sv)});
        // Quaternion from the column-orthonormal frame [e1 e2 n].
        const double m00 = e1.x, m10 = e1.y, m20 = e1.z;
        const double m01 = e2.x, m11 = e2.y, m21 = e2.z;
        const double m02 = n.x, m12 = n.y, m22 = n.z;
        double qw, qx, qy, qz;
        const double tr = m00 + m11 + m22;
        if (tr > 0) {
            const double r = std::sqrt(1.0 + tr);
            qw = 0.5 * r;
            qx = (m21 - m12) / (2 * r);
            qy = (m02 - m20) / (2 * r);
            qz = (m10 - m01) / (2 * r);
        } else if (m00 >= m11 && m00 >= m22) {
            const double r = std::sqrt(1.0 + m00 - m11 - m22);
            qx = 0.5 * r;
            qw = (m21 - m12) / (2 * r);
            qy = (m01 + m10) / (2 * r);
            qz = (m02 + m20) / (2 * r);
        } else if (m11 >= m22) {
            const double r = std::sqrt(1.0 - m00 + m11 - m22);
            qy = 0.5 * r;
            qw = (m02 - m20) / (2 * r);
            qx = (m01 + m10) / (2 * r);
            qz = (m12 + m21) / (2 * r);
        } else {
            const double r = std::sqrt(1.0 - m00 - m11 + m22);
            qz = 0.5 * r;
            qw = (m10 - m01) / (2 * r);
            qx = (m02 + m20) / (2 * r);
            qy = (m12 + m21) / (2 * r);
        }
        quats.insert(quats.end(), {qw, qx, qy, qz});
        m.chart.push_back(s.chart);
        m.px.push_back(s.px);
        m.py.push_back(s.py);
        m.orient_sign.push_back(s.orient_sign);
    }
    m.g_center = store.add_group("free.center", std::move(centers), lr);
    m.g_logscale = store.add_group("free.logscale", std::move(logscales), lr);
    m.g_quat = store.add_group("free.quat", std::move(quats), lr);
    return m;
}

SurfelSet free_surfels_forward(const AtlasState& atlas, const FreeSurfelModel& m,
                               const optim::ParamStore& store) {
    SurfelSet set;
    const auto centers = store.values(m.g_center);
    const auto ls = store.values(m.g_logscale);
    const auto qs = store.values(m.g_quat);
    for (int s = 0; s < m.count; ++s) {
        Surfel sf;
        sf.center = {centers[3 * s], centers[3 * s + 1], centers[3 * s + 2]};
        double q[4] = {qs[4 * s], qs[4 * s + 1], qs[4 * s + 2], qs[4 * s + 3]};
        const double qn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        double qh[4] = {q[0] / qn, q[1] / qn, q[2] / qn, q[3] / qn};
        sf.tu = rot_col1(qh) * std::exp(ls[2 * s]);
        sf.tv = rot_col2(qh) * std::exp(ls[2 * s + 1]);
        const Vec3d cr = sf.tu.cross(sf.tv);
        sf.orient_sign = m.orient_sign[s];
        sf.normal = cr.normalized() * sf.orient_sign;
        sf.chart = m.chart[s];
        sf.px = m.px[s];
        sf.py = m.py[s];
        const auto& chart = atlas.charts[sf.chart];
        const auto color_tex = store.values(atlas.textures[sf.chart].g_color);
        const auto op_tex = store.values(atlas.textures[sf.chart].g_opacity);
        const size_t i = chart.idx(sf.px, sf.py);
        auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
        sf.color = Vec3d{clamp01(color_tex[i * 3]), clamp01(color_tex[i * 3 + 1]),
                         clamp01(color_tex[i * 3 + 2])};
        sf.opacity = sigmoid(op_tex[i]);
        set.surfels.push_back(sf);
    }
    // Surfels are stored in ascending chart order.
    set.chart_begin.assign(static_cast<size_t>(atlas.n_charts()) + 1, 0);
    for (int s = 0; s < m.count; ++s) set.chart_begin[m.chart[s] + 1] = s + 1;
    for (int c = 1; c <= atlas.n_charts(); ++c)
        set.chart_begin[c] = std::max(set.chart_begin[c], set.chart_begin[c - 1]);
    return set;
}

void free_surfels_backward(const AtlasState& atlas, const FreeSurfelModel& m,
                           const SurfelSet& set, const SurfelGrads& grads,
                           optim::ParamStore& store) {
    auto g_center = store.grads(m.g_center);
    auto g_ls = store.grads(m.g_logscale);
    auto g_q = store.grads(m.g_quat);
    const auto ls = store.values(m.g_logscale);
    const auto qs = store.values(m.g_quat);
    for (int s = 0; s < m.count; ++s) {
        g_center[3 * s] += grads.d_center[s].x;
        g_center[3 * s + 1] += grads.d_center[s].y;
        g_center[3 * s + 2] += grads.d_center[s].z;

        const Surfel& sf = set.surfels[s];
        // tu = exp(ls_u) * col1(q_hat): scale gradient via tu itself.
        g_ls[2 * s] += grads.d_tu[s].dot(sf.tu);
        g_ls[2 * s + 1] += grads.d_tv[s].dot(sf.tv);

        double q[4] = {qs[4 * s], qs[4 * s + 1], qs[4 * s + 2], qs[4 * s + 3]};
        const double qn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        double qh[4] = {q[0] / qn, q[1] / qn, q[2] / qn, q[3] / qn};
        Vec3d j1[4], j2[4];
        rot_col1_jac(qh, j1);
        rot_col2_jac(qh, j2);
        const double su = std::exp(ls[2 * s]), sv = std::exp(ls[2 * s + 1]);
        double d_qh[4];
        for (int k = 0; k < 4; ++k)
            d_qh[k] = su * grads.d_tu[s].dot(j1[k]) + sv * grads.d_tv[s].dot(j2[k]);
        // q_hat = q / |q| adjoint.
        double dot = 0;
        for (int k = 0; k < 4; ++k) dot += d_qh[k] * qh[k];
        for (int k = 0; k < 4; ++k) g_q[4 * s + k] += (d_qh[k] - dot * qh[k]) / qn;

        const auto& chart = atlas.charts[sf.chart];
        const auto color_tex = store.values(atlas.textures[sf.chart].g_color);
        auto g_color = store.grads(atlas.textures[sf.chart].g_color);
        auto g_op = store.grads(atlas.textures[sf.chart].g_opacity);
        const size_t i = chart.idx(sf.px, sf.py);
        for (int ch = 0; ch < 3; ++ch) {
            const double v = color_tex[i * 3 + ch];
            if (v > 0.0 && v < 1.0) g_color[i * 3 + ch] += grads.d_color[s][ch];
        }
        g_op[i] += grads.d_opacity[s] * sf.opacity * (1.0 - sf.opacity);
    }
}

}  // namespace chartsurf::render
