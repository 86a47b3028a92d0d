// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/meshing/delaunay.hpp"

#include <cmath>
#include <map>
#include <unordered_map>

#include "chartsurf/core/error.hpp"

namespace chartsurf::meshing {

namespace {

using core::Vec3d;

struct Tet {
    std::array<int, 4> v{};
    std::array<int, 4> nbr{};  // nbr[i] faces vertex v[i]; -1 = hull
    bool alive = true;
};

double orient3d(const Vec3d& a, const Vec3d& b, const Vec3d& c, const Vec3d& d) {
    return (b - a).cross(c - a).dot(d - a);
}

/// > 0 when e lies inside the circumsphere of the positively oriented
/// tetra (a, b, c, d).
double insphere(const Vec3d& a, const Vec3d& b, const Vec3d& c, const Vec3d& d, const Vec3d& e) {
    const Vec3d ae = a - e, be = b - e, ce = c - e, de = d - e;
    const double aa = ae.squared_norm(), bb = be.squared_norm();
    const double cc = ce.squared_norm(), dd = de.squared_norm();
    const double m = ae.x * (be.y * (ce.z * dd - de.z * cc) - be.z * (ce.y * dd - de.y * cc) +
                             bb * (ce.y * de.z - ce.z * de.y)) -
                     ae.y * (be.x * (ce.z * dd - de.z * cc) - be.z * (ce.x * dd - de.x * cc) +
                             bb * (ce.x * de.z - ce.z * de.x)) +
                     ae.z * (be.x * (ce.y * dd - de.y * cc) - be.y * (ce.x * dd - de.x * cc) +
                             bb * (ce.x * de.y - ce.y * de.x)) -
                     aa * (be.x * (ce.y * de.z - ce.z * de.y) - be.y * (ce.x * de.z - ce.z * de.x) +
                           be.z * (ce.x * de.y - ce.y * de.x));
    return -m;  // positive = inside for a positively oriented tetra
}

class Builder {
  public:
    explicit Builder(std::span<const Vec3d> input) {
        // Normalize into [0,1]^3 for predictable predicate scales.
        Vec3d lo = input[0], hi = input[0];
        for (const auto& p : input) {
            lo.x = std::min(lo.x, p.x);
            lo.y = std::min(lo.y, p.y);
            lo.z = std::min(lo.z, p.z);
            hi.x = std::max(hi.x, p.x);
            hi.y = std::max(hi.y, p.y);
            hi.z = std::max(hi.z, p.z);
        }
        const double span = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, 1e-12});
        pts_.reserve(input.size() + 4);
        for (const auto& p : input) pts_.push_back((p - lo) / span);

        // Enclosing super-tetra, far outside the unit cube.
        const double big = 100.0;
        pts_.push_back(Vec3d{-big, -big, -big});
        pts_.push_back(Vec3d{4 * big, -big, -big});
        pts_.push_back(Vec3d{-big, 4 * big, -big});
        pts_.push_back(Vec3d{-big, -big, 4 * big});
        n_real_ = static_cast<int>(input.size());
        const int s0 = n_real_, s1 = n_real_ + 1, s2 = n_real_ + 2, s3 = n_real_ + 3;
        Tet root;
        root.v = {s0, s1, s2, s3};
        if (orient3d(pts_[s0], pts_[s1], pts_[s2], pts_[s3]) < 0) std::swap(root.v[0], root.v[1]);
        root.nbr = {-1, -1, -1, -1};
        tets_.push_back(root);
    }

    void run() {
        for (int p = 0; p < n_real_; ++p) insert(p);
    }

    DelaunayResult result() const {
        DelaunayResult out;
        for (const auto& t : tets_) {
            if (!t.alive) continue;
            bool super = false;
            for (int v : t.v) super |= v >= n_real_;
            if (super) continue;
            out.tets.push_back(t.v);
        }
        return out;
    }

  private:
    std::vector<Vec3d> pts_;
    std::vector<Tet> tets_;
    int n_real_ = 0;
    int last_alive_ = 0;

    bool point_in_tet(int t, const Vec3d& p) const {
        const auto& v = tets_[t].v;
        // Positive orientation maintained: inside iff all four face
        // orientations are non-negative.
        if (orient3d(pts_[v[1]], pts_[v[3]], pts_[v[2]], p) < 0) return false;
        if (orient3d(pts_[v[0]], pts_[v[2]], pts_[v[3]], p) < 0) return false;
        if (orient3d(pts_[v[0]], pts_[v[3]], pts_[v[1]], p) < 0) return false;
        if (orient3d(pts_[v[0]], pts_[v[1]], pts_[v[2]], p) < 0) return false;
        return true;
    }

    int locate(const Vec3d& p) const {
        // Walk from the last inserted region; fall back to a scan.
        int t = last_alive_;
        if (t >= static_cast<int>(tets_.size()) || !tets_[t].alive) t = -1;
        if (t >= 0) {
            for (int steps = 0; steps < static_cast<int>(tets_.size()); ++steps) {
                const auto& v = tets_[t].v;
                int next = -1;
                const double o0 = orient3d(pts_[v[1]], pts_[v[3]], pts_[v[2]], p);
                const double o1 = orient3d(pts_[v[0]], pts_[v[2]], pts_[v[3]], p);
                const double o2 = orient3d(pts_[v[0]], pts_[v[3]], pts_[v[1]], p);
                const double o3 = orient3d(pts_[v[0]], pts_[v[1]], pts_[v[2]], p);
                if (o0 < 0) next = tets_[t].nbr[0];
                else if (o1 < 0) next = tets_[t].nbr[1];
                else if (o2 < 0) next = tets_[t].nbr[2];
                else if (o3 < 0) next = tets_[t].nbr[3];
                else return t;
                if (next < 0 || !tets_[next].alive) break;
                t = next;
            }
        }
        for (int i = static_cast<int>(tets_.size()) - 1; i >= 0; --i)
            if (tets_[i].alive && point_in_tet(i, p)) return i;
        throw Error("delaunay: point location failed");
    }

    void insert(int pi) {
        const Vec3d& p = pts_[pi];
        const int seed = locate(p);

        // Grow the conflict region (tets whose circumsphere contains p).
        std::vector<int> bad;
        std::vector<char> in_bad(tets_.size(), 0);
        std::vector<int> stack{seed};
        in_bad[seed] = 1;
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            bad.push_back(t);
            for (int f = 0; f < 4; ++f) {
                const int nb = tets_[t].nbr[f];
                if (nb < 0 || in_bad[nb] != 0 || !tets_[nb].alive) continue;
                const auto& v = tets_[nb].v;
                if (insphere(pts_[v[0]], pts_[v[1]], pts_[v[2]], pts_[v[3]], p) > 0) {
                    in_bad[nb] = 1;
                    stack.push_back(nb);
                }
            }
        }

        // Boundary faces of the cavity: (ordered face vertices, outside nbr).
        struct Face {
            std::array<int, 3> v;
            int outside;
        };
        std::vector<Face> boundary;
        static const int face_of[4][3] = {{1, 3, 2}, {0, 2, 3}, {0, 3, 1}, {0, 1, 2}};
        for (int t : bad) {
            for (int f = 0; f < 4; ++f) {
                const int nb = tets_[t].nbr[f];
                if (nb >= 0 && in_bad[nb] != 0) continue;
                boundary.push_back({{tets_[t].v[face_of[f][0]], tets_[t].v[face_of[f][1]],
                                     tets_[t].v[face_of[f][2]]},
                                    nb});
            }
        }
        for (int t : bad) tets_[t].alive = false;

        // Retriangulate: one tet per boundary face, apex p.
        std::map<std::pair<int, int>, std::pair<int, int>> half_face;  // edge -> (tet, face_slot)
        std::vector<int> fresh;
        for (const auto& face : boundary) {
            Tet nt;
            nt.v = {face.v[0], face.v[1], face.v[2], pi};
            if (orient3d(pts_[nt.v[0]], pts_[nt.v[1]], pts_[nt.v[2]], pts_[nt.v[3]]) < 0)
                std::swap(nt.v[0], nt.v[1]);
            nt.nbr = {-1, -1, -1, -1};
            const int id = static_cast<int>(tets_.size());
            // Slot 3 faces the apex... the face opposite vertex 3 (= p) is
            // the boundary face; wire it to the outside tetra.
            nt.nbr[3] = face.outside;
            tets_.push_back(nt);
            if (face.outside >= 0) {
                // Wire the outside tetra back through the slot whose
                // opposite face matches this boundary face.
                auto& other = tets_[face.outside];
                for (int f = 0; f < 4; ++f) {
                    int match = 0;
                    for (int k = 0; k < 4; ++k) {
                        if (k == f) continue;
                        for (int m = 0; m < 3; ++m) match += other.v[k] == face.v[m];
                    }
                    if (match == 3) {
                        other.nbr[f] = id;
                        break;
                    }
                }
            }
            fresh.push_back(id);
        }

        // Wire neighbor links among the fresh tets: faces containing p share
        // an edge of the cavity boundary.
        auto edge_key = [](int a, int b) {
            return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
        };
        for (int id : fresh) {
            const auto& v = tets_[id].v;  // v[3] == pi (possibly swapped into 0/1)
            int apex_slot = 0;
            for (int k = 0; k < 4; ++k)
                if (v[k] == pi) apex_slot = k;
            // The face opposite slot s consists of the other three vertices;
            // it contains p unless s == apex_slot. Two fresh tets sharing a
            // p-face meet along one cavity-boundary edge.
            for (int s = 0; s < 4; ++s) {
                if (s == apex_slot) continue;
                std::array<int, 2> edge{};
                int e = 0;
                for (int k = 0; k < 4; ++k)
                    if (k != s && k != apex_slot) edge[e++] = v[k];
                const auto key = edge_key(edge[0], edge[1]);
                const auto it = half_face.find(key);
                if (it == half_face.end()) {
                    half_face.emplace(key, std::make_pair(id, s));
                } else {
                    tets_[id].nbr[s] = it->second.first;
                    tets_[it->second.first].nbr[it->second.second] = id;
                }
            }
        }
        if (!fresh.empty()) last_alive_ = fresh.back();
    }
};

}  // namespace

DelaunayResult delaunay3d(std::span<const Vec3d> points) {
    CHARTSURF_CHECK_MSG(points.size() >= 4, "delaunay3d needs at least 4 points");
    Builder b(points);
    b.run();
    return b.result();
}

}  // namespace chartsurf::meshing
