// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/meshing/tetra.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "chartsurf/core/error.hpp"
#include "chartsurf/core/mesh.hpp"
#include "chartsurf/core/parallel.hpp"
#include "chartsurf/core/rng.hpp"

namespace chartsurf::meshing {

namespace {

using core::Vec3d;

/// Greedy Poisson-disk thinning in input order; returns accepted indices.
std::vector<int> poisson_thin(std::span<const Vec3d> pts, double radius) {
    std::vector<int> accepted;
    if (pts.empty()) return accepted;
    Vec3d lo = pts[0];
    for (const auto& p : pts) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
    }
    const double cell = std::max(radius, 1e-12);
    std::unordered_map<uint64_t, std::vector<int>> grid;
    const auto key_of = [&](const Vec3d& p) {
        const int64_t x = static_cast<int64_t>((p.x - lo.x) / cell);
        const int64_t y = static_cast<int64_t>((p.y - lo.y) / cell);
        const int64_t z = static_cast<int64_t>((p.z - lo.z) / cell);
        return (static_cast<uint64_t>(x) * 73856093ULL) ^
               (static_cast<uint64_t>(y) * 19349663ULL) ^
               (static_cast<uint64_t>(z) * 83492791ULL);
    };
    const auto cell_coord = [&](const Vec3d& p, int64_t& x, int64_t& y, int64_t& z) {
        x = static_cast<int64_t>((p.x - lo.x) / cell);
        y = static_cast<int64_t>((p.y - lo.y) / cell);
        z = static_cast<int64_t>((p.z - lo.z) / cell);
    };
    for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
        int64_t cx, cy, cz;
        cell_coord(pts[i], cx, cy, cz);
        bool blocked = false;
        for (int64_t z = cz - 1; z <= cz + 1 && !blocked; ++z)
            for (int64_t y = cy - 1; y <= cy + 1 && !blocked; ++y)
                for (int64_t x = cx - 1; x <= cx + 1 && !blocked; ++x) {
                    const uint64_t k = (static_cast<uint64_t>(x) * 73856093ULL) ^
                                       (static_cast<uint64_t>(y) * 19349663ULL) ^
                                       (static_cast<uint64_t>(z) * 83492791ULL);
                    const auto it = grid.find(k);
                    if (it == grid.end()) continue;
                    for (int j : it->second)
                        if ((pts[j] - pts[i]).norm() < radius) {
                            blocked = true;
                            break;
                        }
                }
        if (blocked) continue;
        accepted.push_back(i);
        grid[key_of(pts[i])].push_back(i);
    }
    return accepted;
}

}  // namespace

TetraGrid build_adaptive_tetra_grid(std::span<const Vec3d> sample_positions,
                                    std::span<const Vec3d> sample_normals,
                                    std::span<const double> sample_radii, int vertex_budget,
                                    const BinaryOpacityField& field, uint64_t seed) {
    CHARTSURF_CHECK_MSG(vertex_budget >= 1000, "tetra vertex budget must be at least 1000");
    CHARTSURF_CHECK(sample_positions.size() == sample_normals.size() &&
                    sample_positions.size() == sample_radii.size());

    const double diameter = core::bounding_diameter(
        std::vector<Vec3d>(sample_positions.begin(), sample_positions.end()));
    const int target = std::max(4, vertex_budget / 3);

    // Bisection on the Poisson radius until the accepted count is within
    // 10% of the target (or the radius interval collapses).
    double lo = 1e-6 * diameter, hi = diameter;
    std::vector<int> accepted;
    if (static_cast<int>(sample_positions.size()) <= target) {
        accepted.resize(sample_positions.size());
        for (size_t i = 0; i < accepted.size(); ++i) accepted[i] = static_cast<int>(i);
        lo = hi = 0.0;
    } else {
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            accepted = poisson_thin(sample_positions, mid);
            const int n = static_cast<int>(accepted.size());
            if (n > target) lo = mid;
            else hi = mid;
            if (std::abs(n - target) <= target / 10) break;
        }
    }

    TetraGrid grid;
    grid.poisson_radius = 0.5 * (lo + hi);
    grid.points.reserve(accepted.size() * 3);
    for (int i : accepted) {
        const Vec3d n = sample_normals[i];
        const double off = 3.0 * sample_radii[i];
        grid.points.push_back(sample_positions[i]);
        grid.points.push_back(sample_positions[i] + n * off);
        grid.points.push_back(sample_positions[i] - n * off);
    }

    try {
        grid.tets = delaunay3d(grid.points).tets;
    } catch (const Error&) {
        // Degenerate input: jitter once and retry.
        core::Rng rng(seed ^ 0x71E7);
        for (auto& p : grid.points)
            p += Vec3d{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)} *
                 (1e-6 * diameter);
        grid.tets = delaunay3d(grid.points).tets;
    }

    grid.labels.assign(grid.points.size(), 0);
    core::parallel_chunks(grid.points.size(), 64, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) grid.labels[i] = field.occupied(grid.points[i]) ? 1 : 0;
    });
    return grid;
}

core::TriangleMesh extract_tetra_mesh(const TetraGrid& grid, const BinaryOpacityField& field) {
    core::TriangleMesh mesh;
    const double diameter = core::bounding_diameter(grid.points);
    const double area_floor = 1e-12 * diameter * diameter;

    // Crossing points are shared per edge, computed once by bisection on
    // the field between the endpoint positions.
    std::map<std::pair<int, int>, int> edge_vertex;
    const auto crossing = [&](int a, int b) {
        const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        const auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        Vec3d plo = grid.points[key.first], phi = grid.points[key.second];
        const bool occ_lo = field.occupied(plo);
        for (int step = 0; step < 12; ++step) {
            const Vec3d mid = (plo + phi) * 0.5;
            if (field.occupied(mid) == occ_lo) plo = mid;
            else phi = mid;
        }
        const int id = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back((plo + phi) * 0.5);
        edge_vertex.emplace(key, id);
        return id;
    };

    // Marching tetrahedra: 1 or 2 triangles per mixed-label tetra, oriented
    // toward the label-0 side.
    for (const auto& tet : grid.tets) {
        int inside[4], n_in = 0;
        for (int k = 0; k < 4; ++k) inside[k] = grid.labels[tet[k]] != 0;
        for (int k = 0; k < 4; ++k) n_in += inside[k];
        if (n_in == 0 || n_in == 4) continue;

        int in_v[4], out_v[4], ni = 0, no = 0;
        for (int k = 0; k < 4; ++k)
            (inside[k] ? in_v[ni++] : out_v[no++]) = tet[k];

        Vec3d out_centroid{}, in_centroid{};
        for (int k = 0; k < no; ++k) out_centroid += grid.points[out_v[k]];
        for (int k = 0; k < ni; ++k) in_centroid += grid.points[in_v[k]];
        out_centroid = out_centroid / no;
        in_centroid = in_centroid / ni;
        const Vec3d to_outside = out_centroid - in_centroid;

        const auto emit = [&](int a, int b, int c) {
            const Vec3d pa = mesh.vertices[a], pb = mesh.vertices[b], pc = mesh.vertices[c];
            const Vec3d n = (pb - pa).cross(pc - pa);
            if (0.5 * n.norm() < area_floor) return;
            const double d = n.dot(to_outside);
            // Slivers can have their normal exactly perpendicular to the
            // in->out axis (d == 0). The tie-break must keep orientations
            // antisymmetric under a global label flip: the 1<->3 cases emit
            // in the same vertex order under the flip (d changes sign), so
            // the tie bit must follow the labels; the 2-2 case emits in
            // reversed order (d is preserved), so the tie bit must not.
            const bool tie = ni == 2 ? true : grid.labels[tet[0]] != 0;
            const bool keep = d > 0.0 || (d == 0.0 && tie);
            if (keep) mesh.faces.push_back({a, b, c});
            else mesh.faces.push_back({a, c, b});
        };

        if (ni == 1) {
            emit(crossing(in_v[0], out_v[0]), crossing(in_v[0], out_v[1]),
                 crossing(in_v[0], out_v[2]));
        } else if (ni == 3) {
            emit(crossing(in_v[0], out_v[0]), crossing(in_v[1], out_v[0]),
                 crossing(in_v[2], out_v[0]));
        } else {  // 2-2: quad split into two triangles
            const int q00 = crossing(in_v[0], out_v[0]);
            const int q01 = crossing(in_v[0], out_v[1]);
            const int q10 = crossing(in_v[1], out_v[0]);
            const int q11 = crossing(in_v[1], out_v[1]);
            emit(q00, q01, q11);
            emit(q00, q11, q10);
        }
    }
    if (mesh.faces.empty())
        std::fprintf(stderr, "extract_tetra_mesh: no label transitions, empty mesh\n");

    // Drop vertices that ended up unused (degenerate-only edges).
    std::vector<int> newid(mesh.vertices.size(), -1);
    std::vector<Vec3d> verts;
    for (auto& f : mesh.faces)
        for (int k = 0; k < 3; ++k) {
            if (newid[f[k]] < 0) {
                newid[f[k]] = static_cast<int>(verts.size());
                verts.push_back(mesh.vertices[f[k]]);
            }
            f[k] = newid[f[k]];
        }
    mesh.vertices = std::move(verts);
    mesh.validate();
    return mesh;
}

}  // namespace chartsurf::meshing
