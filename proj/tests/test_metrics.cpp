#include <doctest.h>

#include <cmath>
#include <fstream>

#include "chartsurf/metrics/metrics.hpp"
#include "chartsurf/core/rng.hpp"

using namespace chartsurf;
using namespace chartsurf::metrics;
using core::Rng;
using core::Vec3d;

TEST_CASE("chamfer: identical sets, 1-D pair, symmetry") {
    std::vector<Vec3d> a{{0, 0, 0}, {1, 2, 3}, {-1, 0.5, 2}};
    CHECK(chamfer_distance(a, a) == 0.0);

    std::vector<Vec3d> p{{0, 0, 0}};
    std::vector<Vec3d> q{{1, 0, 0}};
    CHECK(chamfer_distance(p, q) == doctest::Approx(1.0));

    Rng rng(3);
    std::vector<Vec3d> x, y;
    for (int i = 0; i < 120; ++i) {
        x.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        y.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    }
    CHECK(chamfer_distance(x, y) == chamfer_distance(y, x));
    CHECK_THROWS_AS(chamfer_distance({}, y), Error);
}

TEST_CASE("grid-accelerated chamfer equals brute force exactly on 500-point sets") {
    Rng rng(9);
    std::vector<Vec3d> a, b;
    for (int i = 0; i < 500; ++i) {
        a.push_back({rng.uniform(-2, 2), rng.uniform(0, 3), rng.uniform(-1, 4)});
        b.push_back({rng.uniform(-2, 2), rng.uniform(0, 3), rng.uniform(-1, 4)});
    }
    const double fast = chamfer_distance(a, b);
    const double brute = chamfer_distance_bruteforce(a, b);
    CHECK(fast == brute);  // identical arithmetic, exact equality
}

namespace {

core::TriangleMesh plane_mesh(double z) {
    core::TriangleMesh m;
    m.vertices = {{-1, -1, z}, {1, -1, z}, {1, 1, z}, {-1, 1, z}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

}  // namespace

TEST_CASE("f_score analytic cases") {
    const auto m = plane_mesh(0.0);
    CHECK(f_score(m, m, 0.01, 20000) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f_score(plane_mesh(0.0), plane_mesh(0.2), 0.1, 20000) == 0.0);
    CHECK(f_score(plane_mesh(0.0), plane_mesh(0.05), 0.1, 20000) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f_score(core::TriangleMesh{}, m, 0.1, 1000) == 0.0);
}

TEST_CASE("f_score is monotone non-decreasing in the threshold") {
    // Two planes offset by 0.05: sweep thresholds through the transition.
    const auto a = plane_mesh(0.0), b = plane_mesh(0.05);
    double prev = -1.0;
    for (double t : {0.01, 0.02, 0.04, 0.05, 0.06, 0.1, 0.5}) {
        const double f = f_score(a, b, t, 5000);
        CHECK(f >= prev);
        prev = f;
    }
}

TEST_CASE("psnr: exact uniform difference and identical-image sentinel") {
    core::ColorImage a(8, 8), b(8, 8);
    for (size_t i = 0; i < a.size(); ++i) {
        a[i] = core::Vec3f(0.5f, 0.5f, 0.5f);
        b[i] = core::Vec3f(0.6f, 0.6f, 0.6f);
    }
    // MSE = (0.6f - 0.5f)^2 computed in double from the float values.
    const double d = static_cast<double>(0.6f) - static_cast<double>(0.5f);
    CHECK(psnr(a, b) == doctest::Approx(-10.0 * std::log10(d * d)).epsilon(1e-12));
    CHECK(std::isinf(psnr(a, a)));
    CHECK(ssim_metric(a, a) == doctest::Approx(1.0));
}

TEST_CASE("psnr strictly decreases as mse grows") {
    core::ColorImage a(6, 6);
    double prev = std::numeric_limits<double>::infinity();
    for (float off : {0.05f, 0.1f, 0.2f, 0.4f}) {
        core::ColorImage b(6, 6);
        for (size_t i = 0; i < b.size(); ++i) b[i] = core::Vec3f(off, off, off);
        const double p = psnr(a, b);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("quantile by linear interpolation matches the sorted-list oracle") {
    std::vector<double> vals{10, 12, 14, 16, 18, 20, 22, 24, 26, 28};
    // position q (n-1) = 0.1 * 9 = 0.9 -> between the two lowest entries.
    const double q10 = quantile(vals, 0.1);
    CHECK(q10 == doctest::Approx(10 + 0.9 * 2.0));
    CHECK(q10 > 10.0);
    CHECK(q10 < 12.0);
    // Shuffled input gives the same answer.
    std::vector<double> shuffled{28, 10, 22, 14, 26, 12, 24, 16, 20, 18};
    CHECK(quantile(shuffled, 0.1) == q10);
    CHECK(quantile(vals, 0.5) == doctest::Approx(19.0));
}

TEST_CASE("eval report serializes to json") {
    EvalReport r;
    r.chamfer = 0.012;
    r.f_score = 0.8;
    r.f_score_threshold = 0.01;
    r.psnr_per_view = {20.0, std::numeric_limits<double>::infinity()};
    r.mean_psnr = 25.0;
    r.q10_psnr = 20.5;
    r.ssim_mean = 0.9;
    const auto path = std::filesystem::temp_directory_path() / "chartsurf_tests" / "eval.json";
    std::filesystem::create_directories(path.parent_path());
    r.write_json(path);
    std::ifstream in(path);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(body.find("\"chamfer\"") != std::string::npos);
    CHECK(body.find("1e+99") != std::string::npos);  // +inf sentinel
}
