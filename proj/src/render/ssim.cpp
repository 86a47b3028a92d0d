// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/render/ssim.hpp"

#include <cmath>

#include "chartsurf/core/error.hpp"

namespace chartsurf::render {

namespace {

constexpr int kRadius = 5;  // 11-tap window
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

struct Window {
    double k[2 * kRadius + 1];
    Window() {
        double sum = 0;
        for (int i = -kRadius; i <= kRadius; ++i) {
            k[i + kRadius] = std::exp(-0.5 * (i * i) / (kSigma * kSigma));
            sum += k[i + kRadius];
        }
        for (double& v : k) v /= sum;
    }
};
const Window kWin;

void conv_x(const std::vector<double>& in, int w, int h, std::vector<double>& out) {
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            const int lo = std::max(-kRadius, -x), hi = std::min(kRadius, w - 1 - x);
            for (int d = lo; d <= hi; ++d) s += kWin.k[d + kRadius] * in[y * w + x + d];
            out[y * w + x] = s;
        }
}

void conv_y(const std::vector<double>& in, int w, int h, std::vector<double>& out) {
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const int lo = std::max(-kRadius, -y), hi = std::min(kRadius, h - 1 - y);
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int d = lo; d <= hi; ++d) s += kWin.k[d + kRadius] * in[(y + d) * w + x];
            out[y * w + x] = s;
        }
    }
}

std::vector<double> axis_norm(int n) {
    std::vector<double> wsum(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(-kRadius, -i), hi = std::min(kRadius, n - 1 - i);
        for (int d = lo; d <= hi; ++d) wsum[i] += kWin.k[d + kRadius];
    }
    return wsum;
}

/// Renormalized separable smoothing.
void smooth(const std::vector<double>& in, int w, int h, const std::vector<double>& wx,
            const std::vector<double>& wy, std::vector<double>& out,
            std::vector<double>& scratch) {
    conv_x(in, w, h, scratch);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) scratch[y * w + x] /= wx[x];
    conv_y(scratch, w, h, out);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out[y * w + x] /= wy[y];
}

/// Adjoint of smooth: divide by the per-pixel normalizer, then plain
/// convolution (the kernel is symmetric).
void smooth_adjoint(const std::vector<double>& g, int w, int h, const std::vector<double>& wx,
                    const std::vector<double>& wy, std::vector<double>& out,
                    std::vector<double>& scratch) {
    std::vector<double> tmp(g.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) tmp[y * w + x] = g[y * w + x] / (wx[x] * wy[y]);
    conv_x(tmp, w, h, scratch);
    conv_y(scratch, w, h, out);
}

}  // namespace

double ssim(std::span<const core::Vec3d> a, std::span<const core::Vec3d> b, int width,
            int height, std::vector<core::Vec3d>* d_a) {
    const size_t n = static_cast<size_t>(width) * height;
    CHARTSURF_CHECK_MSG(a.size() == n && b.size() == n, "ssim: image size mismatch");
    const auto wx = axis_norm(width);
    const auto wy = axis_norm(height);
    if (d_a != nullptr) d_a->assign(n, core::Vec3d{});

    double total = 0.0;
    std::vector<double> x(n), y(n), xx(n), yy(n, 0.0), xy(n);
    std::vector<double> ux, uy, uxx, uyy, uxy, scratch;
    std::vector<double> dmux(n), dmuy(n), dmuxx(n), dmuxy(n), dmuyy(n);
    std::vector<double> adj1, adj2, adj3;

    for (int ch = 0; ch < 3; ++ch) {
        for (size_t i = 0; i < n; ++i) {
            x[i] = a[i][ch];
            y[i] = b[i][ch];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        smooth(x, width, height, wx, wy, ux, scratch);
        smooth(y, width, height, wx, wy, uy, scratch);
        smooth(xx, width, height, wx, wy, uxx, scratch);
        smooth(yy, width, height, wx, wy, uyy, scratch);
        smooth(xy, width, height, wx, wy, uxy, scratch);

        for (size_t i = 0; i < n; ++i) {
            const double mx = ux[i], my = uy[i];
            const double sx2 = uxx[i] - mx * mx;
            const double sy2 = uyy[i] - my * my;
            const double sxy = uxy[i] - mx * my;
            const double a1 = 2 * mx * my + kC1, a2 = 2 * sxy + kC2;
            const double b1 = mx * mx + my * my + kC1, b2 = sx2 + sy2 + kC2;
            const double s = (a1 * a2) / (b1 * b2);
            total += s;
            if (d_a != nullptr) {
                dmux[i] = 2 * my * (a2 - a1) / (b1 * b2) - 2 * mx * s * (1 / b1 - 1 / b2);
                dmuy[i] = 2 * mx * (a2 - a1) / (b1 * b2) - 2 * my * s * (1 / b1 - 1 / b2);
                dmuxx[i] = -s / b2;
                dmuyy[i] = -s / b2;
                dmuxy[i] = 2 * a1 / (b1 * b2);
            }
        }
        if (d_a != nullptr) {
            const double scale = 1.0 / (static_cast<double>(n) * 3.0);
            smooth_adjoint(dmux, width, height, wx, wy, adj1, scratch);
            smooth_adjoint(dmuxx, width, height, wx, wy, adj2, scratch);
            smooth_adjoint(dmuxy, width, height, wx, wy, adj3, scratch);
            for (size_t i = 0; i < n; ++i)
                (*d_a)[i][ch] += scale * (adj1[i] + 2.0 * x[i] * adj2[i] + y[i] * adj3[i]);
        }
    }
    return total / (static_cast<double>(n) * 3.0);
}

}  // namespace chartsurf::render
