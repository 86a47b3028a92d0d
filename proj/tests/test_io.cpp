#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "chartsurf/io/bundle_io.hpp"
#include "chartsurf/io/pfm.hpp"
#include "chartsurf/io/ply.hpp"
#include "chartsurf/io/png.hpp"
#include "chartsurf/scene/synth.hpp"

using namespace chartsurf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    const fs::path p = fs::temp_directory_path() / "chartsurf_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("pfm round trip, negative scale means little-endian") {
    const auto dir = temp_dir("pfm");
    core::DepthMap d(7, 5);
    for (size_t i = 0; i < d.size(); ++i) d[i] = 0.25f * static_cast<float>(i) + 0.5f;
    io::write_pfm(d, dir / "a.pfm");
    const auto back = io::read_pfm(dir / "a.pfm");
    REQUIRE(back.width() == 7);
    REQUIRE(back.height() == 5);
    for (size_t i = 0; i < d.size(); ++i) CHECK(back[i] == d[i]);

    // The header written must carry a negative (little-endian) scale.
    std::ifstream in(dir / "a.pfm", std::ios::binary);
    std::string magic, dims1, dims2, scale;
    in >> magic >> dims1 >> dims2 >> scale;
    CHECK(magic == "Pf");
    CHECK(scale.substr(0, 1) == "-");
}

TEST_CASE("png 8-bit round trip") {
    const auto dir = temp_dir("png");
    core::ColorImage img(9, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 9; ++x)
            img.at(x, y) = core::Vec3f((x * 17 % 256) / 255.f, (y * 63 % 256) / 255.f,
                                       ((x + y) * 29 % 256) / 255.f);
    io::write_png(img, dir / "a.png");
    const auto back = io::read_png(dir / "a.png");
    REQUIRE(back.width() == 9);
    REQUIRE(back.height() == 4);
    for (size_t i = 0; i < img.size(); ++i) {
        CHECK(back[i].x == doctest::Approx(img[i].x).epsilon(1e-6));
        CHECK(back[i].y == doctest::Approx(img[i].y).epsilon(1e-6));
        CHECK(back[i].z == doctest::Approx(img[i].z).epsilon(1e-6));
    }
}

TEST_CASE("ply round trip and truncation error names the element") {
    const auto dir = temp_dir("ply");
    core::TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    mesh.faces = {{0, 1, 2}, {0, 2, 3}};
    io::write_ply(mesh, dir / "m.ply");
    const auto back = io::read_ply(dir / "m.ply");
    REQUIRE(back.vertices.size() == 4);
    REQUIRE(back.faces.size() == 2);
    CHECK(back.vertices[3].z == doctest::Approx(1.0));
    CHECK(back.faces[1][2] == 3);

    // Truncate inside the face list.
    const auto full = fs::file_size(dir / "m.ply");
    std::ifstream in(dir / "m.ply", std::ios::binary);
    std::vector<char> bytes(full - 9);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    std::ofstream out(dir / "trunc.ply", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    try {
        io::read_ply(dir / "trunc.ply");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("face") != std::string::npos);
    }
}

TEST_CASE("bundle round trip preserves all numeric fields") {
    const auto dir = temp_dir("bundle");
    const auto spec = scene::make_preset_scene("boxplane", 48, 40, 3);
    scene::CorruptionSpec corr;
    corr.object_scale_min = 0.8;
    corr.object_scale_max = 1.4;
    corr.pixel_noise = 0.01;
    corr.seed = 7;
    scene::SceneBundle bundle;
    scene::GroundTruth gt;
    scene::generate_scene(spec, corr, 40, bundle, gt);

    io::write_bundle(bundle, dir, &gt);
    const auto back = io::read_bundle(dir);
    REQUIRE(back.n_views() == bundle.n_views());
    for (int i = 0; i < bundle.n_views(); ++i) {
        for (int k = 0; k < 9; ++k) {
            CHECK(back.cameras[i].rotation().m[k] == bundle.cameras[i].rotation().m[k]);
            CHECK(back.cameras[i].intrinsics().m[k] == bundle.cameras[i].intrinsics().m[k]);
        }
        // Depth via float32 PFM is lossless; images quantize to 8 bits at
        // generation time so PNG round-trips exactly.
        for (size_t p = 0; p < bundle.depths[i].size(); ++p)
            CHECK(back.depths[i][p] == bundle.depths[i][p]);
        for (size_t p = 0; p < bundle.images[i].size(); ++p)
            CHECK(back.images[i][p] == bundle.images[i][p]);
    }
    REQUIRE(back.sfm_points.size() == bundle.sfm_points.size());
    for (size_t k = 0; k < back.sfm_points.size(); ++k) {
        CHECK(back.sfm_points[k].position.x == bundle.sfm_points[k].position.x);
        CHECK(back.sfm_points[k].observations.size() ==
              bundle.sfm_points[k].observations.size());
    }
    core::TriangleMesh gt_mesh;
    REQUIRE(io::read_gt_mesh(dir, gt_mesh));
    CHECK(gt_mesh.vertices.size() == gt.mesh.vertices.size());

    std::vector<core::Camera> test_cams;
    std::vector<core::ColorImage> test_imgs;
    REQUIRE(io::read_test_views(dir, test_cams, test_imgs));
    CHECK(test_cams.size() == gt.test_cameras.size());
}

TEST_CASE("malformed cameras.json reports context") {
    const auto dir = temp_dir("badjson");
    std::ofstream out(dir / "cameras.json");
    out << "[{\"K\": [1,2,3], \"R\": [], \"t\": [0,0,0], \"width\": 4, \"height\": 4}]";
    out.close();
    CHECK_THROWS_AS(io::read_bundle(dir), ParseError);
}
