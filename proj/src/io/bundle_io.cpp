// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/io/bundle_io.hpp"

#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "chartsurf/io/pfm.hpp"
#include "chartsurf/io/ply.hpp"
#include "chartsurf/io/png.hpp"

namespace chartsurf::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string view_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03d", i);
    return buf;
}

json camera_to_json(const core::Camera& cam) {
    json j;
    j["K"] = json::array();
    j["R"] = json::array();
    for (int k = 0; k < 9; ++k) j["K"].push_back(cam.intrinsics().m[k]);
    for (int k = 0; k < 9; ++k) j["R"].push_back(cam.rotation().m[k]);
    j["t"] = {cam.translation().x, cam.translation().y, cam.translation().z};
    j["width"] = cam.width();
    j["height"] = cam.height();
    return j;
}

core::Camera camera_from_json(const json& j, const std::string& ctx) {
    try {
        const auto kk = j.at("K");
        const auto rr = j.at("R");
        const auto tt = j.at("t");
        if (kk.size() != 9 || rr.size() != 9 || tt.size() != 3)
            throw ParseError(ctx + ": K/R/t must have 9/9/3 entries");
        core::Mat3d k, r;
        for (int i = 0; i < 9; ++i) {
            k.m[i] = kk[i].get<double>();
            r.m[i] = rr[i].get<double>();
        }
        const core::Vec3d t{tt[0].get<double>(), tt[1].get<double>(), tt[2].get<double>()};
        return core::Camera(r, t, k, j.at("width").get<int>(), j.at("height").get<int>());
    } catch (const json::exception& e) {
        throw ParseError(ctx + ": " + e.what());
    }
}

void write_cameras_json(const std::vector<core::Camera>& cams, const fs::path& path) {
    json arr = json::array();
    for (const auto& c : cams) arr.push_back(camera_to_json(c));
    std::ofstream out(path);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    out << std::setprecision(17) << arr.dump(1) << "\n";
}

std::vector<core::Camera> read_cameras_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw ParseError("bundle: missing " + path.string());
    json arr;
    try {
        in >> arr;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!arr.is_array() || arr.empty())
        throw ParseError(path.string() + ": expected a non-empty camera array");
    std::vector<core::Camera> cams;
    for (size_t i = 0; i < arr.size(); ++i)
        cams.push_back(camera_from_json(arr[i], path.string() + "[" + std::to_string(i) + "]"));
    return cams;
}

}  // namespace

void write_bundle(const scene::SceneBundle& bundle, const fs::path& dir,
                  const scene::GroundTruth* gt) {
    bundle.validate();
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "depth");
    write_cameras_json(bundle.cameras, dir / "cameras.json");
    for (int i = 0; i < bundle.n_views(); ++i) {
        write_png(bundle.images[i], dir / "images" / (view_name(i) + ".png"));
        write_pfm(bundle.depths[i], dir / "depth" / (view_name(i) + ".pfm"));
    }
    json sfm = json::array();
    for (const auto& p : bundle.sfm_points) {
        json jp;
        jp["xyz"] = {p.position.x, p.position.y, p.position.z};
        jp["obs"] = json::array();
        for (const auto& o : p.observations)
            jp["obs"].push_back({{"view", o.view}, {"u", o.u}, {"v", o.v}});
        sfm.push_back(std::move(jp));
    }
    {
        std::ofstream out(dir / "sfm.json");
        CHARTSURF_CHECK_MSG(out.good(), "cannot open sfm.json for writing");
        out << std::setprecision(17) << sfm.dump(1) << "\n";
    }
    if (gt != nullptr) {
        fs::create_directories(dir / "gt");
        write_ply(gt->mesh, dir / "gt" / "mesh.ply");
        if (!gt->test_cameras.empty()) {
            fs::create_directories(dir / "test" / "images");
            write_cameras_json(gt->test_cameras, dir / "test" / "cameras.json");
            for (size_t i = 0; i < gt->test_cameras.size(); ++i)
                write_png(gt->test_images[i],
                          dir / "test" / "images" / (view_name(static_cast<int>(i)) + ".png"));
        }
    }
}

scene::SceneBundle read_bundle(const fs::path& dir) {
    scene::SceneBundle bundle;
    bundle.cameras = read_cameras_json(dir / "cameras.json");
    for (size_t i = 0; i < bundle.cameras.size(); ++i) {
        const auto img_path = dir / "images" / (view_name(static_cast<int>(i)) + ".png");
        const auto depth_path = dir / "depth" / (view_name(static_cast<int>(i)) + ".pfm");
        bundle.images.push_back(read_png(img_path));
        bundle.depths.push_back(read_pfm(depth_path));
    }

    const auto sfm_path = dir / "sfm.json";
    std::ifstream in(sfm_path);
    if (!in.good()) throw ParseError("bundle: missing " + sfm_path.string());
    json arr;
    try {
        in >> arr;
    } catch (const json::exception& e) {
        throw ParseError(sfm_path.string() + ": " + e.what());
    }
    if (!arr.is_array()) throw ParseError(sfm_path.string() + ": expected an array");
    for (size_t k = 0; k < arr.size(); ++k) {
        const auto& jp = arr[k];
        scene::SfmPoint p;
        try {
            const auto& xyz = jp.at("xyz");
            p.position = {xyz.at(0).get<double>(), xyz.at(1).get<double>(),
                          xyz.at(2).get<double>()};
            for (const auto& o : jp.at("obs"))
                p.observations.push_back({o.at("view").get<int>(), o.at("u").get<double>(),
                                          o.at("v").get<double>()});
        } catch (const json::exception& e) {
            throw ParseError(sfm_path.string() + "[" + std::to_string(k) + "]: " + e.what());
        }
        bundle.sfm_points.push_back(std::move(p));
    }
    bundle.validate();
    return bundle;
}

bool read_test_views(const fs::path& dir, std::vector<core::Camera>& cameras,
                     std::vector<core::ColorImage>& images) {
    const auto path = dir / "test" / "cameras.json";
    if (!fs::exists(path)) return false;
    cameras = read_cameras_json(path);
    images.clear();
    for (size_t i = 0; i < cameras.size(); ++i)
        images.push_back(
            read_png(dir / "test" / "images" / (view_name(static_cast<int>(i)) + ".png")));
    return true;
}

bool read_gt_mesh(const fs::path& dir, core::TriangleMesh& mesh) {
    const auto path = dir / "gt" / "mesh.ply";
    if (!fs::exists(path)) return false;
    mesh = read_ply(path);
    return true;
}

}  // namespace chartsurf::io
