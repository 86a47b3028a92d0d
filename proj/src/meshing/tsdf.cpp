// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/meshing/tsdf.hpp"

#include <cmath>
#include <unordered_map>

#include "chartsurf/core/error.hpp"
#include "chartsurf/core/parallel.hpp"
#include "chartsurf/meshing/mc_tables.hpp"

namespace chartsurf::meshing {

namespace {

void integrate_view(TsdfVolume& vol, const core::DepthMap& depth, const Camera& cam) {
    core::parallel_chunks(static_cast<size_t>(vol.nz), 16, [&](size_t, size_t zb, size_t ze) {
        for (size_t zz = zb; zz < ze; ++zz) {
            const int z = static_cast<int>(zz);
            for (int y = 0; y < vol.ny; ++y)
                for (int x = 0; x < vol.nx; ++x) {
                    const Vec3d p = vol.voxel_center(x, y, z);
                    const auto pr = core::project_point(cam, p);
                    if (pr.behind) continue;
                    const int px = static_cast<int>(pr.u), py = static_cast<int>(pr.v);
                    if (pr.u < 0 || pr.v < 0 || px >= depth.width() || py >= depth.height())
                        continue;
                    const float d = depth.at(px, py);
                    if (d <= 0.f) continue;
                    const double sdf = d - pr.z;
                    if (sdf < -vol.trunc) continue;  // far behind the surface
                    const double clamped = std::min(sdf, vol.trunc);
                    const size_t i = vol.idx(x, y, z);
                    const float w_old = vol.weight[i];
                    vol.tsdf[i] = static_cast<float>(
                        (vol.tsdf[i] * w_old + clamped) / (w_old + 1.f));
                    vol.weight[i] = w_old + 1.f;
                }
        }
    });
}

}  // namespace

MultiResTsdf fuse_multires_tsdf(std::span<const core::DepthMap> depths,
                                std::span<const Camera> cameras, int levels, double v0,
                                double trunc) {
    CHARTSURF_CHECK_MSG(!depths.empty() && depths.size() == cameras.size(),
                        "fuse_multires_tsdf needs matching depth maps and cameras");
    CHARTSURF_CHECK_MSG(v0 > 0.0, "voxel size");
    CHARTSURF_CHECK_MSG(trunc >= 2.0 * v0, "truncation must be at least two voxels");
    CHARTSURF_CHECK_MSG(levels >= 1, "levels");

    // Level-0 box: bounds of the backprojected depth samples, padded by the
    // truncation band.
    MultiResTsdf mr;
    Vec3d lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    Vec3d sum{};
    size_t count = 0;
    for (size_t v = 0; v < depths.size(); ++v)
        for (int y = 0; y < depths[v].height(); ++y)
            for (int x = 0; x < depths[v].width(); ++x) {
                const float d = depths[v].at(x, y);
                if (d <= 0.f) continue;
                const Vec3d p = core::backproject_pixel(cameras[v], x + 0.5, y + 0.5, d);
                lo.x = std::min(lo.x, p.x);
                lo.y = std::min(lo.y, p.y);
                lo.z = std::min(lo.z, p.z);
                hi.x = std::max(hi.x, p.x);
                hi.y = std::max(hi.y, p.y);
                hi.z = std::max(hi.z, p.z);
                sum += p;
                ++count;
            }
    CHARTSURF_CHECK_MSG(count > 0, "empty depth coverage");
    lo -= Vec3d{trunc, trunc, trunc};
    hi += Vec3d{trunc, trunc, trunc};
    mr.box_lo = lo;
    mr.box_hi = hi;
    mr.centroid = sum / static_cast<double>(count);

    for (int l = 0; l < levels; ++l) {
        const double scale = std::pow(3.0, l);
        const Vec3d llo = mr.centroid + (lo - mr.centroid) * scale;
        const Vec3d lhi = mr.centroid + (hi - mr.centroid) * scale;
        TsdfVolume vol;
        vol.voxel = v0 * std::pow(2.0, l);
        vol.trunc = trunc * std::pow(2.0, l);
        vol.origin = llo;
        vol.nx = std::max(1, static_cast<int>(std::ceil((lhi.x - llo.x) / vol.voxel)));
        vol.ny = std::max(1, static_cast<int>(std::ceil((lhi.y - llo.y) / vol.voxel)));
        vol.nz = std::max(1, static_cast<int>(std::ceil((lhi.z - llo.z) / vol.voxel)));
        vol.tsdf.assign(static_cast<size_t>(vol.nx) * vol.ny * vol.nz,
                        static_cast<float>(vol.trunc));
        vol.weight.assign(vol.tsdf.size(), 0.f);
        for (size_t v = 0; v < depths.size(); ++v)
            integrate_view(vol, depths[v], cameras[v]);
        mr.levels.push_back(std::move(vol));
    }
    return mr;
}

core::TriangleMesh marching_cubes(const TsdfVolume& vol) {
    core::TriangleMesh mesh;
    // Shared-vertex extraction keyed by the crossing edge.
    std::unordered_map<uint64_t, int> edge_vertex;
    const auto edge_key = [&](int x, int y, int z, int axis) {
        return ((static_cast<uint64_t>(z) * vol.ny + y) * vol.nx + x) * 4 +
               static_cast<uint64_t>(axis);
    };

    // Corner offsets and the edge->(corner, axis) map of the classic tables.
    static const int corner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                     {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    static const int edge_corners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                            {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                            {0, 4}, {1, 5}, {2, 6}, {3, 7}};

    for (int z = 0; z + 1 < vol.nz; ++z)
        for (int y = 0; y + 1 < vol.ny; ++y)
            for (int x = 0; x + 1 < vol.nx; ++x) {
                double val[8];
                bool observed = true;
                for (int c = 0; c < 8; ++c) {
                    const size_t i =
                        vol.idx(x + corner[c][0], y + corner[c][1], z + corner[c][2]);
                    observed &= vol.weight[i] > 0.f;
                    val[c] = vol.tsdf[i];
                }
                if (!observed) continue;
                int cube = 0;
                for (int c = 0; c < 8; ++c)
                    if (val[c] < 0.0) cube |= 1 << c;
                if (kMcEdgeTable[cube] == 0) continue;

                int everts[12];
                for (int e = 0; e < 12; ++e) {
                    if ((kMcEdgeTable[cube] & (1 << e)) == 0) continue;
                    const int c0 = edge_corners[e][0], c1 = edge_corners[e][1];
                    const int gx0 = x + corner[c0][0], gy0 = y + corner[c0][1],
                              gz0 = z + corner[c0][2];
                    const int gx1 = x + corner[c1][0], gy1 = y + corner[c1][1],
                              gz1 = z + corner[c1][2];
                    // Canonical edge id: lower corner + axis.
                    int axis = gx1 != gx0 ? 0 : (gy1 != gy0 ? 1 : 2);
                    const int kx = std::min(gx0, gx1), ky = std::min(gy0, gy1),
                              kz = std::min(gz0, gz1);
                    const uint64_t key = edge_key(kx, ky, kz, axis);
                    const auto it = edge_vertex.find(key);
                    if (it != edge_vertex.end()) {
                        everts[e] = it->second;
                        continue;
                    }
                    const double v0 = val[c0], v1 = val[c1];
                    const double t = v0 == v1 ? 0.5 : v0 / (v0 - v1);
                    const Vec3d p0 = vol.voxel_center(gx0, gy0, gz0);
                    const Vec3d p1 = vol.voxel_center(gx1, gy1, gz1);
                    const int vid = static_cast<int>(mesh.vertices.size());
                    mesh.vertices.push_back(p0 + (p1 - p0) * t);
                    edge_vertex.emplace(key, vid);
                    everts[e] = vid;
                }
                for (int t = 0; kMcTriTable[cube][t] != -1; t += 3) {
                    const int a = everts[kMcTriTable[cube][t]];
                    const int b = everts[kMcTriTable[cube][t + 1]];
                    const int c = everts[kMcTriTable[cube][t + 2]];
                    if (a == b || b == c || a == c) continue;
                    mesh.faces.push_back({a, b, c});
                }
            }
    return mesh;
}

core::TriangleMesh extract_tsdf_mesh(const MultiResTsdf& mr) {
    core::TriangleMesh out;
    const double weld = mr.levels.empty() ? 0.0 : mr.levels[0].voxel / 10.0;

    for (size_t l = 0; l < mr.levels.size(); ++l) {
        core::TriangleMesh level_mesh = marching_cubes(mr.levels[l]);
        if (level_mesh.faces.empty()) continue;

        Vec3d inner_lo{}, inner_hi{};
        if (l > 0) {
            const double scale = std::pow(3.0, static_cast<double>(l - 1));
            inner_lo = mr.centroid + (mr.box_lo - mr.centroid) * scale;
            inner_hi = mr.centroid + (mr.box_hi - mr.centroid) * scale;
        }
        const int base = static_cast<int>(out.vertices.size());
        out.vertices.insert(out.vertices.end(), level_mesh.vertices.begin(),
                            level_mesh.vertices.end());
        for (size_t f = 0; f < level_mesh.faces.size(); ++f) {
            if (l > 0) {
                const Vec3d c = level_mesh.centroid_of_face(f);
                if (c.x >= inner_lo.x && c.x <= inner_hi.x && c.y >= inner_lo.y &&
                    c.y <= inner_hi.y && c.z >= inner_lo.z && c.z <= inner_hi.z)
                    continue;  // covered by the finer level
            }
            out.faces.push_back({level_mesh.faces[f][0] + base, level_mesh.faces[f][1] + base,
                                 level_mesh.faces[f][2] + base});
        }
    }

    // Weld duplicates across level seams, then drop unused vertices and
    // degenerate faces.
    if (weld > 0.0 && !out.vertices.empty()) {
        std::unordered_map<uint64_t, int> cell_rep;
        std::vector<int> remap(out.vertices.size());
        const double inv = 1.0 / weld;
        const auto cell_of = [&](const Vec3d& p) {
            const int64_t cx = static_cast<int64_t>(std::floor(p.x * inv));
            const int64_t cy = static_cast<int64_t>(std::floor(p.y * inv));
            const int64_t cz = static_cast<int64_t>(std::floor(p.z * inv));
            return (static_cast<uint64_t>(cx) * 0x9E3779B97F4A7C15ULL) ^
                   (static_cast<uint64_t>(cy) * 0xC2B2AE3D27D4EB4FULL) ^
                   (static_cast<uint64_t>(cz) * 0x165667B19E3779F9ULL);
        };
        for (size_t v = 0; v < out.vertices.size(); ++v) {
            const uint64_t key = cell_of(out.vertices[v]);
            const auto it = cell_rep.find(key);
            if (it == cell_rep.end()) {
                cell_rep.emplace(key, static_cast<int>(v));
                remap[v] = static_cast<int>(v);
            } else if ((out.vertices[it->second] - out.vertices[v]).norm() <= weld) {
                remap[v] = it->second;
            } else {
                remap[v] = static_cast<int>(v);
            }
        }
        std::vector<int> newid(out.vertices.size(), -1);
        std::vector<Vec3d> verts;
        std::vector<std::array<int, 3>> faces;
        for (const auto& f : out.faces) {
            std::array<int, 3> g;
            for (int k = 0; k < 3; ++k) {
                const int r = remap[f[k]];
                if (newid[r] < 0) {
                    newid[r] = static_cast<int>(verts.size());
                    verts.push_back(out.vertices[r]);
                }
                g[k] = newid[r];
            }
            if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) continue;
            faces.push_back(g);
        }
        out.vertices = std::move(verts);
        out.faces = std::move(faces);
    }
    out.validate();
    return out;
}

}  // namespace chartsurf::meshing
