// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/core/mesh.hpp"

#include <algorithm>
#include <limits>

#include "chartsurf/core/error.hpp"

namespace chartsurf::core {

void TriangleMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (size_t f = 0; f < faces.size(); ++f) {
        const auto& tri = faces[f];
        for (int k = 0; k < 3; ++k)
            CHARTSURF_CHECK_MSG(tri[k] >= 0 && tri[k] < n,
                                "face " << f << " references vertex " << tri[k]);
        CHARTSURF_CHECK_MSG(tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2],
                            "face " << f << " has repeated indices");
    }
    if (!vertex_normals.empty())
        CHARTSURF_CHECK(vertex_normals.size() == vertices.size());
}

double TriangleMesh::surface_area() const {
    double area = 0.0;
    for (const auto& f : faces) {
        const Vec3d e1 = vertices[f[1]] - vertices[f[0]];
        const Vec3d e2 = vertices[f[2]] - vertices[f[0]];
        area += 0.5 * e1.cross(e2).norm();
    }
    return area;
}

Vec3d TriangleMesh::centroid_of_face(size_t f) const {
    const auto& t = faces[f];
    return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

bool TriangleMesh::bounds(Vec3d& lo, Vec3d& hi) const {
    if (vertices.empty()) return false;
    lo = hi = vertices[0];
    for (const auto& v : vertices) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        lo.z = std::min(lo.z, v.z);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
        hi.z = std::max(hi.z, v.z);
    }
    return true;
}

double bounding_diameter(const std::vector<Vec3d>& pts) {
    if (pts.empty()) return 0.0;
    Vec3d lo = pts[0], hi = pts[0];
    for (const auto& v : pts) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        lo.z = std::min(lo.z, v.z);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
        hi.z = std::max(hi.z, v.z);
    }
    return (hi - lo).norm();
}

}  // namespace chartsurf::core
