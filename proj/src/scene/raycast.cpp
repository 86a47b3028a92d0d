// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/scene/raycast.hpp"

#include <cmath>
#include <limits>

#include "chartsurf/core/parallel.hpp"

namespace chartsurf::scene {

using core::Vec3d;

namespace {

bool hit_plane(const Primitive& p, const Vec3d& o, const Vec3d& d, double t_min, double& t,
               Vec3d& n) {
    const double denom = d.dot(p.normal);
    if (std::fabs(denom) < 1e-14) return false;
    const double tt = (p.center - o).dot(p.normal) / denom;
    if (tt <= t_min) return false;
    const Vec3d q = o + tt * d - p.center;
    const Vec3d v_axis = p.normal.cross(p.tangent);
    if (std::fabs(q.dot(p.tangent)) > p.half_u || std::fabs(q.dot(v_axis)) > p.half_v)
        return false;
    t = tt;
    n = denom < 0 ? p.normal : -p.normal;
    return true;
}

bool hit_sphere(const Primitive& p, const Vec3d& o, const Vec3d& d, double t_min, double& t,
                Vec3d& n) {
    const Vec3d oc = o - p.center;
    const double a = d.dot(d);
    const double b = 2.0 * oc.dot(d);
    const double c = oc.dot(oc) - p.radius * p.radius;
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return false;
    const double s = std::sqrt(disc);
    double tt = (-b - s) / (2 * a);
    if (tt <= t_min) tt = (-b + s) / (2 * a);
    if (tt <= t_min) return false;
    t = tt;
    n = (o + tt * d - p.center).normalized();
    if (n.dot(d) > 0) n = -n;
    return true;
}

bool hit_box(const Primitive& p, const Vec3d& o, const Vec3d& d, double t_min, double& t,
             Vec3d& n) {
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    int axis = -1;
    for (int k = 0; k < 3; ++k) {
        const double dk = d[k], ok = o[k];
        const double lo = p.box_min[k], hi = p.box_max[k];
        if (std::fabs(dk) < 1e-14) {
            if (ok < lo || ok > hi) return false;
            continue;
        }
        double t0 = (lo - ok) / dk, t1 = (hi - ok) / dk;
        if (t0 > t1) std::swap(t0, t1);
        if (t0 > t_enter) {
            t_enter = t0;
            axis = k;
        }
        t_exit = std::min(t_exit, t1);
        if (t_enter > t_exit) return false;
    }
    double tt = t_enter;
    if (tt <= t_min) {
        // Origin inside the box: exit face (rare for our scenes).
        tt = t_exit;
        if (tt <= t_min) return false;
        axis = -1;
    }
    t = tt;
    n = Vec3d{0, 0, 0};
    if (axis >= 0) {
        n[axis] = d[axis] > 0 ? -1.0 : 1.0;
    } else {
        // Recover the face from the hit point.
        const Vec3d q = o + tt * d;
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            if (std::fabs(q[k] - p.box_min[k]) < best) {
                best = std::fabs(q[k] - p.box_min[k]);
                n = Vec3d{0, 0, 0};
                n[k] = -1;
            }
            if (std::fabs(q[k] - p.box_max[k]) < best) {
                best = std::fabs(q[k] - p.box_max[k]);
                n = Vec3d{0, 0, 0};
                n[k] = 1;
            }
        }
        if (n.dot(d) > 0) n = -n;
    }
    return true;
}

double checker(const SceneSpec& spec, const Vec3d& p) {
    if (spec.checker_size <= 0.0) return 1.0;
    const double s = spec.checker_size;
    const long long ix = static_cast<long long>(std::floor(p.x / s));
    const long long iy = static_cast<long long>(std::floor(p.y / s));
    const long long iz = static_cast<long long>(std::floor(p.z / s));
    return ((ix + iy + iz) & 1) != 0 ? 1.0 : 0.72;
}

}  // namespace

RayHit cast_ray(const SceneSpec& spec, const Vec3d& origin, const Vec3d& dir, double t_min) {
    RayHit best;
    double best_t = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < spec.primitives.size(); ++i) {
        const auto& prim = spec.primitives[i];
        double t;
        Vec3d n;
        bool ok = false;
        switch (prim.kind) {
            case Primitive::Kind::kPlane: ok = hit_plane(prim, origin, dir, t_min, t, n); break;
            case Primitive::Kind::kSphere: ok = hit_sphere(prim, origin, dir, t_min, t, n); break;
            case Primitive::Kind::kBox: ok = hit_box(prim, origin, dir, t_min, t, n); break;
        }
        if (ok && t < best_t) {
            best_t = t;
            best.hit = true;
            best.t = t;
            best.primitive = static_cast<int>(i);
            best.point = origin + t * dir;
            best.normal = n;
        }
    }
    return best;
}

ViewRender render_view(const SceneSpec& spec, const core::Camera& cam) {
    const int w = cam.width(), h = cam.height();
    ViewRender out{core::DepthMap(w, h, 0.f), core::IdMap(w, h, -1), core::ColorImage(w, h)};
    const Vec3d origin = cam.center();
    bool any_hit = false;
    std::vector<char> hit_flags(static_cast<size_t>(h), 0);
    core::parallel_chunks(static_cast<size_t>(h), 16, [&](size_t c, size_t yb, size_t ye) {
        (void)c;
        for (size_t y = yb; y < ye; ++y) {
            char row_hit = 0;
            for (int x = 0; x < w; ++x) {
                const Vec3d dir = cam.pixel_ray_dir(x + 0.5, y + 0.5);
                const RayHit hit = cast_ray(spec, origin, dir);
                if (!hit.hit) continue;
                row_hit = 1;
                out.depth.at(x, static_cast<int>(y)) = static_cast<float>(hit.t);
                out.object_id.at(x, static_cast<int>(y)) = hit.primitive;
                // Headlight Lambert plus ambient, modulated by a checker.
                const Vec3d view_dir = dir.normalized();
                const double lambert = std::max(0.0, hit.normal.dot(-view_dir));
                const double shade = 0.2 + 0.8 * lambert;
                const Vec3d albedo = spec.primitives[hit.primitive].albedo;
                const double mod = checker(spec, hit.point);
                auto q8 = [](double v) {
                    const double cl = v < 0 ? 0 : (v > 1 ? 1 : v);
                    return static_cast<float>(std::lround(cl * 255.0) / 255.0);
                };
                out.color.at(x, static_cast<int>(y)) =
                    core::Vec3f(q8(albedo.x * shade * mod), q8(albedo.y * shade * mod),
                                q8(albedo.z * shade * mod));
            }
            hit_flags[y] = row_hit;
        }
    });
    for (char f : hit_flags) any_hit |= (f != 0);
    if (!any_hit) throw Error("empty view: camera sees no primitive");
    return out;
}

core::TriangleMesh tessellate(const SceneSpec& spec, int sphere_rings) {
    core::TriangleMesh mesh;
    auto add_quad = [&](const Vec3d& a, const Vec3d& b, const Vec3d& c, const Vec3d& d) {
        const int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.insert(mesh.vertices.end(), {a, b, c, d});
        mesh.faces.push_back({base, base + 1, base + 2});
        mesh.faces.push_back({base, base + 2, base + 3});
    };
    for (const auto& p : spec.primitives) {
        switch (p.kind) {
            case Primitive::Kind::kPlane: {
                const Vec3d u = p.tangent * p.half_u;
                const Vec3d v = p.normal.cross(p.tangent) * p.half_v;
                add_quad(p.center - u - v, p.center + u - v, p.center + u + v, p.center - u + v);
                break;
            }
            case Primitive::Kind::kBox: {
                const Vec3d& l = p.box_min;
                const Vec3d& hh = p.box_max;
                const Vec3d v000{l.x, l.y, l.z}, v100{hh.x, l.y, l.z}, v010{l.x, hh.y, l.z},
                    v110{hh.x, hh.y, l.z}, v001{l.x, l.y, hh.z}, v101{hh.x, l.y, hh.z},
                    v011{l.x, hh.y, hh.z}, v111{hh.x, hh.y, hh.z};
                add_quad(v000, v100, v110, v010);  // z = lo
                add_quad(v001, v011, v111, v101);  // z = hi
                add_quad(v000, v001, v101, v100);  // y = lo
                add_quad(v010, v110, v111, v011);  // y = hi
                add_quad(v000, v010, v011, v001);  // x = lo
                add_quad(v100, v101, v111, v110);  // x = hi
                break;
            }
            case Primitive::Kind::kSphere: {
                const int rings = sphere_rings, segs = 2 * sphere_rings;
                const int base = static_cast<int>(mesh.vertices.size());
                for (int r = 0; r <= rings; ++r) {
                    const double phi = M_PI * r / rings;
                    for (int s = 0; s < segs; ++s) {
                        const double th = 2.0 * M_PI * s / segs;
                        mesh.vertices.push_back(
                            p.center + p.radius * Vec3d{std::sin(phi) * std::cos(th),
                                                        std::cos(phi),
                                                        std::sin(phi) * std::sin(th)});
                    }
                }
                for (int r = 0; r < rings; ++r)
                    for (int s = 0; s < segs; ++s) {
                        const int s1 = (s + 1) % segs;
                        const int a = base + r * segs + s, b = base + r * segs + s1;
                        const int c = base + (r + 1) * segs + s1, d = base + (r + 1) * segs + s;
                        if (r > 0) mesh.faces.push_back({a, b, c});
                        if (r + 1 < rings) mesh.faces.push_back({a, c, d});
                    }
                break;
            }
        }
    }
    mesh.validate();
    return mesh;
}

}  // namespace chartsurf::scene
