// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/atlas/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace chartsurf::atlas {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'C', 'P'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in.good()) throw ParseError(std::string("checkpoint: truncated reading ") + what);
    return v;
}

void put_f32s(std::ofstream& out, std::span<const double> vals) {
    std::vector<float> f(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) f[i] = static_cast<float>(vals[i]);
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * 4));
}

std::vector<double> get_f32s(std::ifstream& in, size_t n, const char* what) {
    std::vector<float> f(n);
    in.read(reinterpret_cast<char*>(f.data()), static_cast<std::streamsize>(n * 4));
    if (!in.good()) throw ParseError(std::string("checkpoint: truncated reading ") + what);
    std::vector<double> d(n);
    for (size_t i = 0; i < n; ++i) d[i] = f[i];
    return d;
}

}  // namespace

void save_checkpoint(const AtlasState& atlas, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, static_cast<uint32_t>(atlas.charts.size()));
    for (int i = 0; i < atlas.n_charts(); ++i) {
        const Chart& c = atlas.charts[i];
        const DeformModel& m = atlas.models[i];
        put(out, static_cast<int32_t>(c.view));
        put(out, static_cast<int32_t>(c.w));
        put(out, static_cast<int32_t>(c.h));
        put(out, static_cast<uint8_t>(m.mode == DeformModel::Mode::kFree ? 1 : 0));
        put(out, static_cast<int32_t>(m.feature_dim));
        put(out, static_cast<int32_t>(m.hidden));
        put(out, static_cast<int32_t>(m.bins));
        put(out, static_cast<int32_t>(m.enc_w));
        put(out, static_cast<int32_t>(m.enc_h));
        put(out, m.d_min);
        put(out, m.d_max);
        put(out, static_cast<uint8_t>(atlas.textures[i].present ? 1 : 0));
        for (int k = 0; k < 9; ++k) put(out, c.camera.rotation().m[k]);
        put(out, c.camera.translation().x);
        put(out, c.camera.translation().y);
        put(out, c.camera.translation().z);
        for (int k = 0; k < 9; ++k) put(out, c.camera.intrinsics().m[k]);
        put(out, static_cast<int32_t>(c.camera.width()));
        put(out, static_cast<int32_t>(c.camera.height()));
        out.write(reinterpret_cast<const char*>(c.valid.data()),
                  static_cast<std::streamsize>(c.valid.size()));
        std::vector<double> flat(c.initial_points.size() * 3);
        for (size_t p = 0; p < c.initial_points.size(); ++p) {
            flat[3 * p + 0] = c.initial_points[p].x;
            flat[3 * p + 1] = c.initial_points[p].y;
            flat[3 * p + 2] = c.initial_points[p].z;
        }
        put_f32s(out, flat);
    }
    put(out, static_cast<uint32_t>(atlas.store.group_count()));
    for (size_t gi = 0; gi < atlas.store.group_count(); ++gi) {
        const auto& g = atlas.store.group(gi);
        put(out, static_cast<uint32_t>(g.name.size()));
        out.write(g.name.data(), static_cast<std::streamsize>(g.name.size()));
        put(out, g.lr);
        put(out, static_cast<uint64_t>(g.values.size()));
        put_f32s(out, g.values);
    }
    CHARTSURF_CHECK_MSG(out.good(), "short write to " << path);
}

AtlasState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ParseError("checkpoint: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in.good() || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("checkpoint: " + path.string() + ": bad magic");
    const auto version = get<uint32_t>(in, "version");
    if (version != kVersion)
        throw ParseError("checkpoint: " + path.string() + ": version " +
                         std::to_string(version) + " != " + std::to_string(kVersion));
    const auto n_charts = get<uint32_t>(in, "chart count");

    AtlasState atlas;
    std::vector<uint8_t> tex_flags;
    for (uint32_t i = 0; i < n_charts; ++i) {
        Chart c;
        DeformModel m;
        c.view = get<int32_t>(in, "view");
        c.w = get<int32_t>(in, "w");
        c.h = get<int32_t>(in, "h");
        m.mode = get<uint8_t>(in, "mode") != 0 ? DeformModel::Mode::kFree
                                               : DeformModel::Mode::kRay;
        m.feature_dim = get<int32_t>(in, "d");
        m.hidden = get<int32_t>(in, "hidden");
        m.bins = get<int32_t>(in, "bins");
        m.enc_w = get<int32_t>(in, "enc_w");
        m.enc_h = get<int32_t>(in, "enc_h");
        m.d_min = get<double>(in, "d_min");
        m.d_max = get<double>(in, "d_max");
        tex_flags.push_back(get<uint8_t>(in, "textures flag"));
        core::Mat3d r, k;
        for (int q = 0; q < 9; ++q) r.m[q] = get<double>(in, "camera R");
        core::Vec3d t;
        t.x = get<double>(in, "camera t");
        t.y = get<double>(in, "camera t");
        t.z = get<double>(in, "camera t");
        for (int q = 0; q < 9; ++q) k.m[q] = get<double>(in, "camera K");
        const int cw = get<int32_t>(in, "camera width");
        const int ch = get<int32_t>(in, "camera height");
        c.camera = core::Camera(r, t, k, cw, ch);
        const size_t n = static_cast<size_t>(c.w) * c.h;
        c.valid.resize(n);
        in.read(reinterpret_cast<char*>(c.valid.data()), static_cast<std::streamsize>(n));
        if (!in.good()) throw ParseError("checkpoint: truncated valid mask");
        const auto flat = get_f32s(in, n * 3, "baked points");
        c.initial_points.resize(n);
        for (size_t p = 0; p < n; ++p)
            c.initial_points[p] = {flat[3 * p], flat[3 * p + 1], flat[3 * p + 2]};
        c.refresh_reference_maps();
        atlas.charts.push_back(std::move(c));
        atlas.models.push_back(m);
        atlas.textures.push_back(TextureGroups{});
    }

    const auto n_groups = get<uint32_t>(in, "group count");
    for (uint32_t gi = 0; gi < n_groups; ++gi) {
        const auto name_len = get<uint32_t>(in, "group name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in.good()) throw ParseError("checkpoint: truncated group name");
        const double lr = get<double>(in, "group lr");
        const auto size = get<uint64_t>(in, "group size");
        auto values = get_f32s(in, size, name.c_str());
        atlas.store.add_group(name, std::move(values), lr);
    }

    // Rebind group indices.
    for (int i = 0; i < atlas.n_charts(); ++i) {
        DeformModel& m = atlas.models[i];
        const std::string p = "c" + std::to_string(atlas.charts[i].view) + ".";
        m.g_enc = atlas.store.index_of(p + "enc");
        m.g_z = atlas.store.index_of(p + "zbins");
        m.g_w1 = atlas.store.index_of(p + "w1");
        m.g_b1 = atlas.store.index_of(p + "b1");
        m.g_w2 = atlas.store.index_of(p + "w2");
        m.g_b2 = atlas.store.index_of(p + "b2");
        m.g_conf = atlas.store.index_of(p + "conf");
        if (tex_flags[i] != 0) {
            const std::string tp = "tex" + std::to_string(atlas.charts[i].view) + ".";
            atlas.textures[i].g_color = atlas.store.index_of(tp + "color");
            atlas.textures[i].g_opacity = atlas.store.index_of(tp + "opacity");
            atlas.textures[i].present = true;
        }
    }
    return atlas;
}

}  // namespace chartsurf::atlas
