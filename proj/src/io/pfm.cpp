// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/io/pfm.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace chartsurf::io {

namespace {

void byteswap_floats(std::vector<float>& v) {
    for (float& f : v) {
        uint32_t u;
        std::memcpy(&u, &f, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&f, &u, 4);
    }
}

}  // namespace

void write_pfm(const core::DepthMap& depth, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    out << "Pf\n" << depth.width() << " " << depth.height() << "\n-1.0\n";
    // Bottom-to-top row order.
    for (int y = depth.height() - 1; y >= 0; --y)
        out.write(reinterpret_cast<const char*>(&depth.at(0, y)),
                  static_cast<std::streamsize>(depth.width()) * 4);
    CHARTSURF_CHECK_MSG(out.good(), "short write to " << path);
}

core::DepthMap read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ParseError("pfm: cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "Pf")
        throw ParseError("pfm: " + path.string() + ": expected grayscale magic 'Pf', got '" +
                         magic + "'");
    int w = 0, h = 0;
    double scale = 0.0;
    in >> w >> h >> scale;
    if (!in.good() || w <= 0 || h <= 0)
        throw ParseError("pfm: " + path.string() + ": bad dimensions");
    if (scale == 0.0) throw ParseError("pfm: " + path.string() + ": zero scale");
    in.get();  // single whitespace after the scale line
    core::DepthMap depth(w, h);
    std::vector<float> row(static_cast<size_t>(w));
    const bool file_little = scale < 0.0;
    const bool host_little = std::endian::native == std::endian::little;
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w) * 4);
        if (!in.good())
            throw ParseError("pfm: " + path.string() + ": truncated pixel data at row " +
                             std::to_string(y));
        if (file_little != host_little) byteswap_floats(row);
        const float mag = static_cast<float>(std::fabs(scale));
        for (int x = 0; x < w; ++x) depth.at(x, y) = mag == 1.f ? row[x] : row[x] * mag;
    }
    return depth;
}

}  // namespace chartsurf::io
