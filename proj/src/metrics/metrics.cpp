// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <unordered_map>

#include <json.hpp>

#include "chartsurf/core/rng.hpp"
#include "chartsurf/render/ssim.hpp"

namespace chartsurf::metrics {

namespace {

/// Uniform hash grid over points with an exact expanding-shell nearest
/// neighbor query.
class PointGrid {
  public:
    explicit PointGrid(std::span<const Vec3d> pts) : pts_(pts.begin(), pts.end()) {
        CHARTSURF_CHECK(!pts_.empty());
        lo_ = hi_ = pts_[0];
        for (const auto& p : pts_) {
            lo_.x = std::min(lo_.x, p.x);
            lo_.y = std::min(lo_.y, p.y);
            lo_.z = std::min(lo_.z, p.z);
            hi_.x = std::max(hi_.x, p.x);
            hi_.y = std::max(hi_.y, p.y);
            hi_.z = std::max(hi_.z, p.z);
        }
        const double diag = std::max((hi_ - lo_).norm(), 1e-12);
        cell_ = std::max(diag / std::max(std::cbrt(static_cast<double>(pts_.size())), 1.0),
                         1e-12);
        nx_ = static_cast<int>((hi_.x - lo_.x) / cell_) + 1;
        ny_ = static_cast<int>((hi_.y - lo_.y) / cell_) + 1;
        nz_ = static_cast<int>((hi_.z - lo_.z) / cell_) + 1;
        cells_.resize(static_cast<size_t>(nx_) * ny_ * nz_);
        for (size_t i = 0; i < pts_.size(); ++i)
            cells_[cell_of(pts_[i])].push_back(static_cast<int>(i));
    }

    /// Exact nearest distance: shells expand until the best distance is
    /// provably closed (best <= (ring-1) * cell).
    double nearest_distance(const Vec3d& p) const {
        const int cx = std::clamp(static_cast<int>((p.x - lo_.x) / cell_), 0, nx_ - 1);
        const int cy = std::clamp(static_cast<int>((p.y - lo_.y) / cell_), 0, ny_ - 1);
        const int cz = std::clamp(static_cast<int>((p.z - lo_.z) / cell_), 0, nz_ - 1);
        double best = std::numeric_limits<double>::infinity();
        const int max_ring = std::max({nx_, ny_, nz_});
        for (int ring = 0; ring <= max_ring + 1; ++ring) {
            if (std::isfinite(best) && best <= (ring - 1) * cell_) break;
            for (int z = cz - ring; z <= cz + ring; ++z) {
                if (z < 0 || z >= nz_) continue;
                for (int y = cy - ring; y <= cy + ring; ++y) {
                    if (y < 0 || y >= ny_) continue;
                    for (int x = cx - ring; x <= cx + ring; ++x) {
                        if (x < 0 || x >= nx_) continue;
                        if (std::max({std::abs(x - cx), std::abs(y - cy), std::abs(z - cz)}) !=
                            ring)
                            continue;
                        for (int i : cells_[idx(x, y, z)])
                            best = std::min(best, (pts_[i] - p).norm());
                    }
                }
            }
        }
        return best;
    }

  private:
    size_t idx(int x, int y, int z) const { return (static_cast<size_t>(z) * ny_ + y) * nx_ + x; }
    size_t cell_of(const Vec3d& p) const {
        const int x = std::clamp(static_cast<int>((p.x - lo_.x) / cell_), 0, nx_ - 1);
        const int y = std::clamp(static_cast<int>((p.y - lo_.y) / cell_), 0, ny_ - 1);
        const int z = std::clamp(static_cast<int>((p.z - lo_.z) / cell_), 0, nz_ - 1);
        return idx(x, y, z);
    }

    std::vector<Vec3d> pts_;
    Vec3d lo_{}, hi_{};
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1, nz_ = 1;
    std::vector<std::vector<int>> cells_;
};

double mean_nearest(std::span<const Vec3d> from, const PointGrid& to) {
    double sum = 0.0;
    for (const auto& p : from) sum += to.nearest_distance(p);
    return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(std::span<const Vec3d> pred, std::span<const Vec3d> gt) {
    CHARTSURF_CHECK_MSG(!pred.empty() && !gt.empty(), "chamfer_distance: empty point set");
    const PointGrid pg(pred), gg(gt);
    return 0.5 * (mean_nearest(pred, gg) + mean_nearest(gt, pg));
}

double chamfer_distance_bruteforce(std::span<const Vec3d> pred, std::span<const Vec3d> gt) {
    CHARTSURF_CHECK_MSG(!pred.empty() && !gt.empty(), "chamfer_distance: empty point set");
    auto one_way = [](std::span<const Vec3d> a, std::span<const Vec3d> b) {
        double sum = 0.0;
        for (const auto& p : a) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : b) best = std::min(best, (p - q).norm());
            sum += best;
        }
        return sum / static_cast<double>(a.size());
    };
    return 0.5 * (one_way(pred, gt) + one_way(gt, pred));
}

std::vector<Vec3d> sample_mesh_surface(const core::TriangleMesh& mesh, int count,
                                       uint64_t seed) {
    std::vector<Vec3d> out;
    if (mesh.faces.empty() || count <= 0) return out;
    std::vector<double> cumulative(mesh.faces.size());
    double area = 0.0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        area += 0.5 *
                (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                    .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                    .norm();
        cumulative[f] = area;
    }
    if (area <= 0.0) return out;
    core::Rng rng(seed);
    out.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double r = rng.uniform() * area;
        const size_t f = std::lower_bound(cumulative.begin(), cumulative.end(), r) -
                         cumulative.begin();
        const auto& t = mesh.faces[std::min(f, mesh.faces.size() - 1)];
        double u = rng.uniform(), v = rng.uniform();
        if (u + v > 1.0) {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        out.push_back(mesh.vertices[t[0]] + (mesh.vertices[t[1]] - mesh.vertices[t[0]]) * u +
                      (mesh.vertices[t[2]] - mesh.vertices[t[0]]) * v);
    }
    return out;
}

double f_score(const core::TriangleMesh& pred, const core::TriangleMesh& gt, double threshold,
               int samples, uint64_t seed) {
    CHARTSURF_CHECK_MSG(threshold > 0.0, "f_score threshold must be positive");
    const auto ps = sample_mesh_surface(pred, samples, seed);
    const auto gs = sample_mesh_surface(gt, samples, seed);
    if (ps.empty() || gs.empty()) {
        std::fprintf(stderr, "f_score: empty mesh, returning 0\n");
        return 0.0;
    }
    const PointGrid pg(ps), gg(gs);
    size_t p_ok = 0, r_ok = 0;
    for (const auto& p : ps) p_ok += gg.nearest_distance(p) <= threshold;
    for (const auto& g : gs) r_ok += pg.nearest_distance(g) <= threshold;
    const double precision = static_cast<double>(p_ok) / ps.size();
    const double recall = static_cast<double>(r_ok) / gs.size();
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double psnr(const core::ColorImage& a, const core::ColorImage& b) {
    CHARTSURF_CHECK(a.width() == b.width() && a.height() == b.height());
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const Vec3d d = a[i].to_double() - b[i].to_double();
        mse += d.dot(d);
    }
    mse /= 3.0 * static_cast<double>(a.size());
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

double ssim_metric(const core::ColorImage& a, const core::ColorImage& b) {
    CHARTSURF_CHECK(a.width() == b.width() && a.height() == b.height());
    std::vector<Vec3d> da(a.size()), db(b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        da[i] = a[i].to_double();
        db[i] = b[i].to_double();
    }
    return render::ssim(da, db, a.width(), a.height());
}

double quantile(std::vector<double> values, double q) {
    CHARTSURF_CHECK_MSG(!values.empty() && q > 0.0 && q < 1.0, "quantile arguments");
    std::sort(values.begin(), values.end());
    const double pos = q * (static_cast<double>(values.size()) - 1.0);
    const size_t i = static_cast<size_t>(pos);
    if (i + 1 >= values.size()) return values.back();
    const double f = pos - static_cast<double>(i);
    return values[i] * (1.0 - f) + values[i + 1] * f;
}

void EvalReport::write_json(const std::filesystem::path& path) const {
    nlohmann::json j;
    const auto safe = [](double v) { return std::isfinite(v) ? v : 1e99; };
    j["chamfer"] = safe(chamfer);
    j["f_score"] = safe(f_score);
    j["f_score_threshold"] = safe(f_score_threshold);
    j["psnr"] = nlohmann::json::array();
    for (double p : psnr_per_view) j["psnr"].push_back(safe(p));
    j["mean_psnr"] = safe(mean_psnr);
    j["q10_psnr"] = safe(q10_psnr);
    j["ssim_mean"] = safe(ssim_mean);
    std::ofstream out(path);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    out << std::setprecision(17) << j.dump(1) << "\n";
}

}  // namespace chartsurf::metrics
