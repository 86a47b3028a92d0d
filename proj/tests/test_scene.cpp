#include <doctest.h>

#include <cmath>

#include "chartsurf/scene/synth.hpp"

using namespace chartsurf;
using namespace chartsurf::scene;
using core::Vec3d;

namespace {

SceneSpec single_plane_scene(int wh = 32) {
    return make_preset_scene("plane1", wh, wh, 1);
}

}  // namespace

TEST_CASE("fronto-parallel plane: center pixel depth is exact") {
    const auto spec = single_plane_scene();
    const auto r = render_view(spec, spec.cameras[0]);
    // plane1 places the plane at z=2 in front of a camera looking +z from x offset 0.3.
    const int cx = spec.width / 2, cy = spec.height / 2;
    CHECK(r.depth.at(cx, cy) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("sphere on the principal axis: center depth = distance - radius") {
    SceneSpec spec;
    spec.width = spec.height = 33;
    spec.primitives.push_back(Primitive::sphere({0, 0, 3}, 1.0, {0.5, 0.5, 0.5}));
    core::Mat3d k = core::Mat3d::identity();
    k(0, 0) = k(1, 1) = 40;
    k(0, 2) = k(1, 2) = 16.5;
    spec.cameras.push_back(core::Camera(core::Mat3d::identity(), Vec3d{}, k, 33, 33));
    const auto r = render_view(spec, spec.cameras[0]);
    CHECK(r.depth.at(16, 16) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(r.object_id.at(16, 16) == 0);
}

TEST_CASE("box silhouette: depth discontinuity matches analytic gap") {
    // Box in front of a far plane; at the silhouette column the depth jumps
    // from the box side to the plane. Verified against direct ray casting.
    SceneSpec spec;
    spec.width = spec.height = 64;
    spec.primitives.push_back(
        Primitive::plane({0, 0, 4.0}, {0, 0, -1}, {1, 0, 0}, 10, 10, {0.5, 0.5, 0.5}));
    spec.primitives.push_back(Primitive::box({-0.5, -0.5, 1.8}, {0.5, 0.5, 2.4}, {0.6, 0.3, 0.2}));
    core::Mat3d k = core::Mat3d::identity();
    k(0, 0) = k(1, 1) = 60;
    k(0, 2) = k(1, 2) = 32;
    spec.cameras.push_back(core::Camera(core::Mat3d::identity(), Vec3d{}, k, 64, 64));
    const auto r = render_view(spec, spec.cameras[0]);
    for (int x = 1; x < 64; ++x) {
        const int id_prev = r.object_id.at(x - 1, 32), id_here = r.object_id.at(x, 32);
        if (id_prev == 1 && id_here == 0) {
            const double jump = r.depth.at(x, 32) - r.depth.at(x - 1, 32);
            // Oracle: cast the two rays directly.
            const auto cam = spec.cameras[0];
            const auto h0 = cast_ray(spec, cam.center(), cam.pixel_ray_dir(x - 0.5, 32.5));
            const auto h1 = cast_ray(spec, cam.center(), cam.pixel_ray_dir(x + 0.5, 32.5));
            CHECK(jump == doctest::Approx(h1.t - h0.t).epsilon(1e-6));
            CHECK(jump > 1.0);  // plane at 4 vs box side < 2.8
            return;
        }
    }
    FAIL("no silhouette transition found");
}

TEST_CASE("camera seeing nothing raises empty view") {
    SceneSpec spec;
    spec.width = spec.height = 16;
    spec.primitives.push_back(Primitive::sphere({0, 0, -5}, 0.5, {0.5, 0.5, 0.5}));  // behind
    core::Mat3d k = core::Mat3d::identity();
    k(0, 0) = k(1, 1) = 20;
    k(0, 2) = k(1, 2) = 8;
    spec.cameras.push_back(core::Camera(core::Mat3d::identity(), Vec3d{}, k, 16, 16));
    CHECK_THROWS_WITH_AS(render_view(spec, spec.cameras[0]),
                         doctest::Contains("empty view"), Error);
}

TEST_CASE("identity corruption returns the input bit-exactly") {
    const auto spec = single_plane_scene();
    const auto r = render_view(spec, spec.cameras[0]);
    CorruptionSpec corr;  // all defaults: scales 1, offsets 0, noise 0
    const auto out = corrupt_depth(r.depth, r.object_id, corr, 0);
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == r.depth[i]);
}

TEST_CASE("fixed per-object scales produce exact per-object ratios") {
    const auto spec = make_preset_scene("boxplane", 48, 48, 1);
    const auto r = render_view(spec, spec.cameras[0]);
    CorruptionSpec corr;
    corr.object_scale_min = 0.4;
    corr.object_scale_max = 2.5;
    corr.fixed_object_scales = {0.5, 2.0, 1.3};
    const auto out = corrupt_depth(r.depth, r.object_id, corr, 0);
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
            const int id = r.object_id.at(x, y);
            if (id < 0) continue;
            const double ratio = out.at(x, y) / r.depth.at(x, y);
            CHECK(ratio == doctest::Approx(corr.fixed_object_scales[id]).epsilon(1e-6));
        }
}

TEST_CASE("corruption is deterministic given the seed") {
    const auto spec = make_preset_scene("boxplane", 40, 40, 1);
    const auto r = render_view(spec, spec.cameras[0]);
    CorruptionSpec corr;
    corr.object_scale_min = 0.5;
    corr.object_scale_max = 2.0;
    corr.pixel_noise = 0.02;
    corr.view_offset_max = 0.05;
    corr.seed = 1234;
    const auto a = corrupt_depth(r.depth, r.object_id, corr, 3);
    const auto b = corrupt_depth(r.depth, r.object_id, corr, 3);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    const auto c = corrupt_depth(r.depth, r.object_id, corr, 4);  // other view differs
    size_t diff = 0;
    for (size_t i = 0; i < a.size(); ++i) diff += a[i] != c[i];
    CHECK(diff > 0);
}

TEST_CASE("corruption preserves per-object log-depth gradients") {
    const auto spec = make_preset_scene("boxplane", 64, 64, 1);
    const auto r = render_view(spec, spec.cameras[0]);
    CorruptionSpec corr;
    corr.object_scale_min = 0.5;
    corr.object_scale_max = 2.0;
    corr.pixel_noise = 0.01;
    corr.seed = 9;
    const auto out = corrupt_depth(r.depth, r.object_id, corr, 0);
    const double sigma = corr.pixel_noise;
    double worst = 0.0;
    for (int y = 1; y < 63; ++y)
        for (int x = 1; x < 63; ++x) {
            // Interior: the whole 3x3 neighborhood on the same object.
            const int id = r.object_id.at(x, y);
            if (id < 0) continue;
            bool interior = true;
            for (int dy = -1; dy <= 1 && interior; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (r.object_id.at(x + dx, y + dy) != id) {
                        interior = false;
                        break;
                    }
            if (!interior) continue;
            const double gx_clean =
                0.5 * (std::log(r.depth.at(x + 1, y)) - std::log(r.depth.at(x - 1, y)));
            const double gx_corr =
                0.5 * (std::log(out.at(x + 1, y)) - std::log(out.at(x - 1, y)));
            worst = std::max(worst, std::fabs(gx_corr - gx_clean));
        }
    CHECK(worst <= 3.0 * sigma);
}

TEST_CASE("sfm sampling: inliers on surface, exact outlier count, reprojection") {
    const auto spec = make_preset_scene("boxplane", 64, 64, 5);
    CorruptionSpec corr;
    corr.seed = 21;
    SceneBundle bundle;
    GroundTruth gt;

    SUBCASE("outlier fraction 0: all points on the GT surface") {
        corr.sfm_outlier_fraction = 0.0;
        generate_scene(spec, corr, 150, bundle, gt);
        for (const auto& p : bundle.sfm_points) {
            // Surface check by casting a ray from view 0 of each observation.
            double best = 1e9;
            for (const auto& prim_hit : {0}) {
                (void)prim_hit;
            }
            // Distance along the observing camera ray: reproject into the
            // observing view and compare depth against a fresh ray cast.
            const auto& o = p.observations.front();
            const auto& cam = bundle.cameras[o.view];
            const auto hit = cast_ray(spec, cam.center(), cam.pixel_ray_dir(o.u, o.v));
            REQUIRE(hit.hit);
            best = (hit.point - p.position).norm();
            CHECK(best < 1e-6 * gt.diameter);
        }
    }

    SUBCASE("outlier fraction 0.2 displaces an exact deterministic count") {
        corr.sfm_outlier_fraction = 0.2;
        generate_scene(spec, corr, 200, bundle, gt);
        size_t n_out = 0;
        for (bool b : gt.sfm_outlier_mask) n_out += b;
        CHECK(n_out == 40);
    }

    SUBCASE("inlier observations reproject within half a pixel") {
        corr.sfm_outlier_fraction = 0.0;
        generate_scene(spec, corr, 100, bundle, gt);
        for (const auto& p : bundle.sfm_points)
            for (const auto& o : p.observations) {
                const auto pr = core::project_point(bundle.cameras[o.view], p.position);
                REQUIRE_FALSE(pr.behind);
                const double err = std::hypot(pr.u - o.u, pr.v - o.v);
                CHECK(err < 0.5);
            }
    }
}

TEST_CASE("generated bundles are bit-identical for the same seed") {
    const auto spec = make_preset_scene("boxplane", 40, 40, 3);
    CorruptionSpec corr;
    corr.object_scale_min = 0.5;
    corr.object_scale_max = 2.0;
    corr.pixel_noise = 0.01;
    corr.sfm_outlier_fraction = 0.1;
    corr.seed = 77;
    SceneBundle b1, b2;
    GroundTruth g1, g2;
    generate_scene(spec, corr, 60, b1, g1);
    generate_scene(spec, corr, 60, b2, g2);
    for (int i = 0; i < b1.n_views(); ++i)
        for (size_t p = 0; p < b1.depths[i].size(); ++p)
            CHECK(b1.depths[i][p] == b2.depths[i][p]);
    for (size_t k = 0; k < b1.sfm_points.size(); ++k) {
        CHECK(b1.sfm_points[k].position.x == b2.sfm_points[k].position.x);
        CHECK(b1.sfm_points[k].position.y == b2.sfm_points[k].position.y);
        CHECK(b1.sfm_points[k].position.z == b2.sfm_points[k].position.z);
    }
}
