// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/io/png.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

namespace chartsurf::io {

namespace {

void put_u32be(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(static_cast<uint8_t>(x >> 24));
    v.push_back(static_cast<uint8_t>(x >> 16));
    v.push_back(static_cast<uint8_t>(x >> 8));
    v.push_back(static_cast<uint8_t>(x));
}

uint32_t get_u32be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void write_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& data) {
    std::vector<uint8_t> head;
    put_u32be(head, static_cast<uint32_t>(data.size()));
    out.write(reinterpret_cast<const char*>(head.data()), 4);
    out.write(type, 4);
    if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()), data.size());
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<uint8_t> tail;
    put_u32be(tail, static_cast<uint32_t>(crc));
    out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

void write_png(const core::ColorImage& img, const std::filesystem::path& path) {
    const int w = img.width(), h = img.height();
    std::vector<uint8_t> raw(static_cast<size_t>(h) * (1 + 3 * static_cast<size_t>(w)));
    size_t o = 0;
    auto q = [](float v) {
        const float c = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
        return static_cast<uint8_t>(std::lround(c * 255.f));
    };
    for (int y = 0; y < h; ++y) {
        raw[o++] = 0;  // filter: none
        for (int x = 0; x < w; ++x) {
            const auto& c = img.at(x, y);
            raw[o++] = q(c.x);
            raw[o++] = q(c.y);
            raw[o++] = q(c.z);
        }
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> comp(comp_len);
    const int zrc = compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6);
    CHARTSURF_CHECK_MSG(zrc == Z_OK, "zlib compress failed: " << zrc);
    comp.resize(comp_len);

    std::ofstream out(path, std::ios::binary);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    out.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, static_cast<uint32_t>(w));
    put_u32be(ihdr, static_cast<uint32_t>(h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: RGB
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);  // no interlace
    write_chunk(out, "IHDR", ihdr);
    write_chunk(out, "IDAT", comp);
    write_chunk(out, "IEND", {});
    CHARTSURF_CHECK_MSG(out.good(), "short write to " << path);
}

core::ColorImage read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ParseError("png: cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw ParseError("png: " + path.string() + ": bad signature");

    size_t pos = 8;
    int w = 0, h = 0, bit_depth = 0, color_type = 0;
    std::vector<uint8_t> idat;
    bool saw_iend = false;
    while (pos + 8 <= bytes.size()) {
        const uint32_t len = get_u32be(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            throw ParseError("png: " + path.string() + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const uint8_t* data = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw ParseError("png: bad IHDR length");
            w = static_cast<int>(get_u32be(data));
            h = static_cast<int>(get_u32be(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw ParseError("png: interlaced PNG unsupported");
            if (bit_depth != 8) throw ParseError("png: only 8-bit PNG supported");
            if (color_type != 2 && color_type != 6 && color_type != 0)
                throw ParseError("png: only RGB/RGBA/gray supported");
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
            break;
        }
        pos += 12 + len;
    }
    if (w <= 0 || h <= 0) throw ParseError("png: " + path.string() + ": missing IHDR");
    if (!saw_iend) throw ParseError("png: " + path.string() + ": missing IEND");

    const int ch = color_type == 2 ? 3 : (color_type == 6 ? 4 : 1);
    const size_t stride = 1 + static_cast<size_t>(w) * ch;
    std::vector<uint8_t> raw(static_cast<size_t>(h) * stride);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    const int zrc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zrc != Z_OK || raw_len != raw.size())
        throw ParseError("png: " + path.string() + ": inflate failed");

    // Undo per-row filters.
    std::vector<uint8_t> prev(static_cast<size_t>(w) * ch, 0);
    core::ColorImage img(w, h);
    std::vector<uint8_t> cur(static_cast<size_t>(w) * ch);
    for (int y = 0; y < h; ++y) {
        const uint8_t* row = &raw[static_cast<size_t>(y) * stride];
        const int filter = row[0];
        const uint8_t* src = row + 1;
        for (int i = 0; i < w * ch; ++i) {
            const int a = i >= ch ? cur[i - ch] : 0;
            const int b = prev[i];
            const int c = i >= ch ? prev[i - ch] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw ParseError("png: unknown filter type");
            }
            cur[i] = static_cast<uint8_t>(v & 0xff);
        }
        for (int x = 0; x < w; ++x) {
            const uint8_t* px = &cur[static_cast<size_t>(x) * ch];
            const float r = px[0] / 255.f;
            const float g = ch >= 3 ? px[1] / 255.f : r;
            const float b2 = ch >= 3 ? px[2] / 255.f : r;
            img.at(x, y) = core::Vec3f(r, g, b2);
        }
        prev = cur;
    }
    return img;
}

}  // namespace chartsurf::io
