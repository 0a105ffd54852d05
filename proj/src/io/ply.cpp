#include "ash/ply.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ash {
namespace {

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

Scalar parse_scalar(const std::string &name) {
    if (name == "char" || name == "int8") return Scalar::Int8;
    if (name == "uchar" || name == "uint8") return Scalar::UInt8;
    if (name == "short" || name == "int16") return Scalar::Int16;
    if (name == "ushort" || name == "uint16") return Scalar::UInt16;
    if (name == "int" || name == "int32") return Scalar::Int32;
    if (name == "uint" || name == "uint32") return Scalar::UInt32;
    if (name == "float" || name == "float32") return Scalar::Float32;
    if (name == "double" || name == "float64") return Scalar::Float64;
    throw std::runtime_error("unsupported PLY scalar type '" + name + "'");
}

size_t scalar_size(Scalar s) {
    switch (s) {
        case Scalar::Int8:
        case Scalar::UInt8: return 1;
        case Scalar::Int16:
        case Scalar::UInt16: return 2;
        case Scalar::Int32:
        case Scalar::UInt32:
        case Scalar::Float32: return 4;
        case Scalar::Float64: return 8;
    }
    return 0;
}

struct Property {
    std::string name;
    Scalar type = Scalar::Float32;
    bool is_list = false;
    Scalar count_type = Scalar::UInt8;
};

struct Element {
    std::string name;
    int64_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    bool binary = false;
    std::vector<Element> elements;
};

Header read_header(std::istream &in) {
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw std::runtime_error("not a PLY file");
    Header header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "ascii")
                header.binary = false;
            else if (fmt == "binary_little_endian")
                header.binary = true;
            else
                throw std::runtime_error("unsupported PLY format '" + fmt + "'");
        } else if (word == "element") {
            Element e;
            ss >> e.name >> e.count;
            header.elements.push_back(e);
        } else if (word == "property") {
            if (header.elements.empty()) throw std::runtime_error("PLY property outside element");
            Property p;
            std::string type;
            ss >> type;
            if (type == "list") {
                std::string count_type, item_type;
                ss >> count_type >> item_type >> p.name;
                p.is_list = true;
                p.count_type = parse_scalar(count_type);
                p.type = parse_scalar(item_type);
            } else {
                p.type = parse_scalar(type);
                ss >> p.name;
            }
            header.elements.back().properties.push_back(p);
        } else if (word == "end_header") {
            return header;
        }
    }
    throw std::runtime_error("PLY header has no end_header");
}

double read_binary_scalar(std::istream &in, Scalar type) {
    char buf[8];
    if (!in.read(buf, static_cast<std::streamsize>(scalar_size(type))))
        throw std::runtime_error("truncated PLY body");
    switch (type) {
        case Scalar::Int8: return static_cast<int8_t>(buf[0]);
        case Scalar::UInt8: return static_cast<uint8_t>(buf[0]);
        case Scalar::Int16: { int16_t v; std::memcpy(&v, buf, 2); return v; }
        case Scalar::UInt16: { uint16_t v; std::memcpy(&v, buf, 2); return v; }
        case Scalar::Int32: { int32_t v; std::memcpy(&v, buf, 4); return v; }
        case Scalar::UInt32: { uint32_t v; std::memcpy(&v, buf, 4); return v; }
        case Scalar::Float32: { float v; std::memcpy(&v, buf, 4); return v; }
        case Scalar::Float64: { double v; std::memcpy(&v, buf, 8); return v; }
    }
    return 0;
}

double read_scalar(std::istream &in, Scalar type, bool binary) {
    if (binary) return read_binary_scalar(in, type);
    double v;
    if (!(in >> v)) throw std::runtime_error("truncated PLY body");
    return v;
}

struct PlyData {
    PointCloud cloud;
    std::vector<Eigen::Vector3i> triangles;
};

PlyData read_ply(const std::filesystem::path &path, bool want_faces) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const Header header = read_header(in);

    PlyData data;
    for (const Element &element : header.elements) {
        const bool is_vertex = element.name == "vertex";
        const bool is_face = element.name == "face";
        std::vector<int> slot(element.properties.size(), -1);
        bool has_color = false, has_normal = false, has_xyz = false;
        if (is_vertex) {
            static const char *names[] = {"x", "y", "z", "red", "green", "blue", "nx", "ny", "nz"};
            for (size_t p = 0; p < element.properties.size(); ++p) {
                for (int k = 0; k < 9; ++k) {
                    if (element.properties[p].name == names[k]) slot[p] = k;
                }
            }
            for (int s : slot) {
                has_xyz |= s >= 0 && s < 3;
                has_color |= s >= 3 && s < 6;
                has_normal |= s >= 6;
            }
            if (!has_xyz) throw std::runtime_error("PLY vertex element lacks x/y/z");
            data.cloud.positions.resize(static_cast<size_t>(element.count));
            if (has_color) data.cloud.colors.resize(static_cast<size_t>(element.count));
            if (has_normal) data.cloud.normals.resize(static_cast<size_t>(element.count));
        }

        for (int64_t row = 0; row < element.count; ++row) {
            double fields[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            for (size_t p = 0; p < element.properties.size(); ++p) {
                const Property &prop = element.properties[p];
                if (prop.is_list) {
                    const auto n = static_cast<int64_t>(read_scalar(in, prop.count_type, header.binary));
                    std::vector<int32_t> items(static_cast<size_t>(n));
                    for (auto &item : items) item = static_cast<int32_t>(read_scalar(in, prop.type, header.binary));
                    if (is_face && want_faces) {
                        // Fan-triangulate polygons.
                        for (int64_t k = 1; k + 1 < n; ++k)
                            data.triangles.emplace_back(items[0], items[static_cast<size_t>(k)],
                                                        items[static_cast<size_t>(k + 1)]);
                    }
                    continue;
                }
                double v = read_scalar(in, prop.type, header.binary);
                if (slot[p] >= 3 && slot[p] < 6 && (prop.type == Scalar::UInt8)) v /= 255.0;
                if (slot[p] >= 0) fields[slot[p]] = v;
            }
            if (!is_vertex) continue;
            const auto r = static_cast<size_t>(row);
            data.cloud.positions[r] = {fields[0], fields[1], fields[2]};
            if (has_color)
                data.cloud.colors[r] = {static_cast<float>(fields[3]), static_cast<float>(fields[4]),
                                        static_cast<float>(fields[5])};
            if (has_normal) data.cloud.normals[r] = {fields[6], fields[7], fields[8]};
        }
    }
    return data;
}

template <typename T>
void put(std::ostream &out, T v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

uint8_t to_byte(float c) { return static_cast<uint8_t>(std::clamp(c, 0.0f, 1.0f) * 255.0f + 0.5f); }

void write_vertices(std::ostream &out, PlyFormat format, const std::vector<Eigen::Vector3d> &positions,
                    const std::vector<Eigen::Vector3f> &colors, const std::vector<Eigen::Vector3d> &normals) {
    const bool binary = format == PlyFormat::BinaryLittleEndian;
    for (size_t i = 0; i < positions.size(); ++i) {
        const Eigen::Vector3d &p = positions[i];
        if (binary) {
            put<float>(out, static_cast<float>(p.x()));
            put<float>(out, static_cast<float>(p.y()));
            put<float>(out, static_cast<float>(p.z()));
            if (!normals.empty())
                for (int k = 0; k < 3; ++k) put<float>(out, static_cast<float>(normals[i][k]));
            if (!colors.empty())
                for (int k = 0; k < 3; ++k) put<uint8_t>(out, to_byte(colors[i][k]));
        } else {
            out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' ' << static_cast<float>(p.z());
            if (!normals.empty())
                for (int k = 0; k < 3; ++k) out << ' ' << static_cast<float>(normals[i][k]);
            if (!colors.empty())
                for (int k = 0; k < 3; ++k) out << ' ' << static_cast<int>(to_byte(colors[i][k]));
            out << '\n';
        }
    }
}

void write_header(std::ostream &out, PlyFormat format, size_t vertices, bool normals, bool colors,
                  const size_t *faces) {
    out << "ply\nformat " << (format == PlyFormat::Ascii ? "ascii" : "binary_little_endian") << " 1.0\n";
    out << "element vertex " << vertices << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
    if (colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (faces) out << "element face " << *faces << "\nproperty list uchar int vertex_indices\n";
    out << "end_header\n";
}

std::ofstream open_out(const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.precision(9);
    return out;
}

}  // namespace

void write_ply(const std::filesystem::path &path, const PointCloud &cloud, PlyFormat format) {
    cloud.validate();
    std::ofstream out = open_out(path);
    write_header(out, format, cloud.size(), cloud.has_normals(), cloud.has_colors(), nullptr);
    write_vertices(out, format, cloud.positions, cloud.colors, cloud.normals);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_ply(const std::filesystem::path &path, const TriangleMesh &mesh, PlyFormat format) {
    std::ofstream out = open_out(path);
    const size_t faces = mesh.triangles.size();
    const bool normals = !mesh.normals.empty() && mesh.normals.size() == mesh.vertices.size();
    write_header(out, format, mesh.vertices.size(), normals, false, &faces);
    write_vertices(out, format, mesh.vertices, {}, normals ? mesh.normals : std::vector<Eigen::Vector3d>{});
    for (const Eigen::Vector3i &t : mesh.triangles) {
        if (format == PlyFormat::BinaryLittleEndian) {
            put<uint8_t>(out, 3);
            for (int k = 0; k < 3; ++k) put<int32_t>(out, t[k]);
        } else {
            out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
        }
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

PointCloud read_ply_points(const std::filesystem::path &path) { return read_ply(path, false).cloud; }

TriangleMesh read_ply_mesh(const std::filesystem::path &path) {
    PlyData data = read_ply(path, true);
    TriangleMesh mesh;
    mesh.vertices = std::move(data.cloud.positions);
    mesh.normals = std::move(data.cloud.normals);
    mesh.triangles = std::move(data.triangles);
    return mesh;
}

}  // namespace ash
