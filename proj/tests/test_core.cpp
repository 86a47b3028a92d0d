#include <doctest.h>

#include <cmath>

#include "chartsurf/core/camera.hpp"
#include "chartsurf/core/image.hpp"
#include "chartsurf/core/parallel.hpp"
#include "chartsurf/core/rng.hpp"

using namespace chartsurf;
using namespace chartsurf::core;

namespace {

Camera simple_camera() {
    Mat3d k = Mat3d::identity();
    k(0, 0) = 100;
    k(1, 1) = 100;
    k(0, 2) = 50;
    k(1, 2) = 50;
    return Camera(Mat3d::identity(), Vec3d{0, 0, 0}, k, 100, 100);
}

Camera random_camera(Rng& rng) {
    // Random rotation from three Euler-ish angles.
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-1.4, 1.4), c = rng.uniform(-3.0, 3.0);
    const Mat3d rz = Mat3d::from_rows({std::cos(a), -std::sin(a), 0},
                                      {std::sin(a), std::cos(a), 0}, {0, 0, 1});
    const Mat3d ry = Mat3d::from_rows({std::cos(b), 0, std::sin(b)}, {0, 1, 0},
                                      {-std::sin(b), 0, std::cos(b)});
    const Mat3d rx = Mat3d::from_rows({1, 0, 0}, {0, std::cos(c), -std::sin(c)},
                                      {0, std::sin(c), std::cos(c)});
    Mat3d k = Mat3d::identity();
    k(0, 0) = rng.uniform(80, 300);
    k(1, 1) = rng.uniform(80, 300);
    k(0, 2) = rng.uniform(20, 140);
    k(1, 2) = rng.uniform(20, 100);
    return Camera(rz * ry * rx, Vec3d{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)},
                  k, 160, 120);
}

}  // namespace

TEST_CASE("project principal axis point") {
    const Camera cam = simple_camera();
    const auto pr = project_point(cam, Vec3d{0, 0, 2});
    CHECK(pr.u == doctest::Approx(50.0));
    CHECK(pr.v == doctest::Approx(50.0));
    CHECK(pr.z == doctest::Approx(2.0));
    CHECK_FALSE(pr.behind);
}

TEST_CASE("project off-axis point: u = fx*x/z + cx") {
    const Camera cam = simple_camera();
    const auto pr = project_point(cam, Vec3d{1, 0, 2});
    CHECK(pr.u == doctest::Approx(100.0));
    CHECK(pr.v == doctest::Approx(50.0));
    CHECK(pr.z == doctest::Approx(2.0));
}

TEST_CASE("behind-camera signalled") {
    const Camera cam = simple_camera();
    CHECK(project_point(cam, Vec3d{0, 0, -1}).behind);
    CHECK(project_point(cam, Vec3d{0, 0, 0}).behind);
}

TEST_CASE("backproject rejects non-positive depth") {
    const Camera cam = simple_camera();
    CHECK_THROWS_AS(backproject_pixel(cam, 50, 50, 0.0), Error);
    CHECK_THROWS_AS(backproject_pixel(cam, 50, 50, -1.0), Error);
}

TEST_CASE("project/backproject round trip on 1000 random cameras") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        const Camera cam = random_camera(rng);
        const double u = rng.uniform(0, cam.width());
        const double v = rng.uniform(0, cam.height());
        const double z = rng.uniform(0.1, 50.0);
        const Vec3d p = backproject_pixel(cam, u, v, z);
        const auto pr = project_point(cam, p);
        CHECK_FALSE(pr.behind);
        CHECK(std::fabs(pr.u - u) <= 1e-9 * std::max(1.0, std::fabs(u)));
        CHECK(std::fabs(pr.v - v) <= 1e-9 * std::max(1.0, std::fabs(v)));
        CHECK(std::fabs(pr.z - z) <= 1e-9 * std::max(1.0, z));
    }
}

TEST_CASE("camera validation rejects junk") {
    Mat3d bad = Mat3d::identity();
    bad(0, 0) = 2.0;  // not a rotation
    Mat3d k = Mat3d::identity();
    k(0, 0) = k(1, 1) = 100;
    k(0, 2) = k(1, 2) = 50;
    CHECK_THROWS_AS(Camera(bad, Vec3d{}, k, 100, 100), Error);
    Mat3d k2 = k;
    k2(0, 0) = -5;
    CHECK_THROWS_AS(Camera(Mat3d::identity(), Vec3d{}, k2, 100, 100), Error);
}

TEST_CASE("pixel_ray_dir matches backprojection") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const Camera cam = random_camera(rng);
        const double u = rng.uniform(0, cam.width()), v = rng.uniform(0, cam.height());
        const double z = rng.uniform(0.2, 9.0);
        const Vec3d via_ray = cam.center() + z * cam.pixel_ray_dir(u, v);
        const Vec3d via_bp = backproject_pixel(cam, u, v, z);
        CHECK((via_ray - via_bp).norm() < 1e-9 * std::max(1.0, via_bp.norm()));
    }
}

TEST_CASE("image grid basics") {
    ImageGrid<float> g(4, 3, 1.5f);
    CHECK(g.size() == 12);
    g.at(2, 1) = 7.f;
    CHECK(g.at(2, 1) == 7.f);
    CHECK(g.in_bounds(3, 2));
    CHECK_FALSE(g.in_bounds(4, 0));
    CHECK(bilinear_scalar(g, 2.0, 1.0) == doctest::Approx(7.0));
    CHECK(bilinear_scalar(g, -5.0, -5.0) == doctest::Approx(1.5));
}

TEST_CASE("parallel chunked sum matches serial at different thread counts") {
    std::vector<double> xs(10007);
    Rng rng(3);
    for (auto& x : xs) x = rng.uniform(-1, 1);
    auto run = [&] {
        return parallel_sum(xs.size(), 64, [&](size_t, size_t b, size_t e) {
            double s = 0.0;
            for (size_t i = b; i < e; ++i) s += xs[i];
            return s;
        });
    };
    set_thread_count(1);
    const double s1 = run();
    set_thread_count(4);
    const double s4 = run();
    set_thread_count(0);
    CHECK(s1 == s4);  // bitwise: chunk layout is thread-count independent
}

TEST_CASE("rng determinism and fork independence") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(1);
    Rng f = c.fork(2);
    CHECK(f.next_u64() != c.next_u64());
}
