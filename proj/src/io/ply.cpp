// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/io/ply.hpp"

#include <cstring>
#include <fstream>

#include "chartsurf/core/error.hpp"
#include <sstream>

namespace chartsurf::io {

void write_ply(const core::TriangleMesh& mesh, const std::filesystem::path& path) {
    mesh.validate();
    std::ofstream out(path, std::ios::binary);
    CHARTSURF_CHECK_MSG(out.good(), "cannot open " << path << " for writing");
    const bool normals = !mesh.vertex_normals.empty();
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        float v[6] = {static_cast<float>(mesh.vertices[i].x), static_cast<float>(mesh.vertices[i].y),
                      static_cast<float>(mesh.vertices[i].z), 0.f, 0.f, 0.f};
        int n = 3;
        if (normals) {
            v[3] = static_cast<float>(mesh.vertex_normals[i].x);
            v[4] = static_cast<float>(mesh.vertex_normals[i].y);
            v[5] = static_cast<float>(mesh.vertex_normals[i].z);
            n = 6;
        }
        out.write(reinterpret_cast<const char*>(v), n * 4);
    }
    for (const auto& f : mesh.faces) {
        const uint8_t cnt = 3;
        int32_t idx[3] = {f[0], f[1], f[2]};
        out.write(reinterpret_cast<const char*>(&cnt), 1);
        out.write(reinterpret_cast<const char*>(idx), 12);
    }
    CHARTSURF_CHECK_MSG(out.good(), "short write to " << path);
}

core::TriangleMesh read_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ParseError("ply: cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "ply") throw ParseError("ply: " + path.string() + ": missing 'ply' magic");
    std::getline(in, line);
    if (line != "format binary_little_endian 1.0")
        throw ParseError("ply: " + path.string() + ": unsupported format '" + line + "'");

    size_t n_vertices = 0, n_faces = 0;
    int vertex_props = 0;
    bool has_normals = false;
    std::string current_element;
    for (;;) {
        if (!std::getline(in, line))
            throw ParseError("ply: " + path.string() + ": header ended before end_header");
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment") continue;
        if (tok == "element") {
            std::string name;
            size_t count;
            ls >> name >> count;
            current_element = name;
            if (name == "vertex") n_vertices = count;
            else if (name == "face") n_faces = count;
            else throw ParseError("ply: " + path.string() + ": unsupported element '" + name + "'");
        } else if (tok == "property") {
            if (current_element == "vertex") {
                std::string type, name;
                ls >> type >> name;
                if (type != "float")
                    throw ParseError("ply: " + path.string() + ": vertex property type '" + type +
                                     "' unsupported");
                ++vertex_props;
                if (name == "nx") has_normals = true;
            }
        } else if (tok == "end_header") {
            break;
        }
    }
    if (vertex_props != 3 && vertex_props != 6)
        throw ParseError("ply: " + path.string() + ": expected 3 or 6 vertex properties");

    core::TriangleMesh mesh;
    mesh.vertices.resize(n_vertices);
    if (has_normals) mesh.vertex_normals.resize(n_vertices);
    for (size_t i = 0; i < n_vertices; ++i) {
        float v[6];
        in.read(reinterpret_cast<char*>(v), vertex_props * 4);
        if (!in.good())
            throw ParseError("ply: " + path.string() + ": truncated vertex element at index " +
                             std::to_string(i));
        mesh.vertices[i] = core::Vec3d{v[0], v[1], v[2]};
        if (has_normals) mesh.vertex_normals[i] = core::Vec3d{v[3], v[4], v[5]};
    }
    mesh.faces.resize(n_faces);
    for (size_t i = 0; i < n_faces; ++i) {
        uint8_t cnt = 0;
        in.read(reinterpret_cast<char*>(&cnt), 1);
        if (!in.good() || cnt != 3)
            throw ParseError("ply: " + path.string() + ": truncated face element at index " +
                             std::to_string(i));
        int32_t idx[3];
        in.read(reinterpret_cast<char*>(idx), 12);
        if (!in.good())
            throw ParseError("ply: " + path.string() + ": truncated face element at index " +
                             std::to_string(i));
        mesh.faces[i] = {idx[0], idx[1], idx[2]};
    }
    mesh.validate();
    return mesh;
}

}  // namespace chartsurf::io
