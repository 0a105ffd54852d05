#include "ash/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ash {

void Intrinsics::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw std::invalid_argument("focal lengths must be positive");
    if (width < 1 || height < 1) throw std::invalid_argument("image size must be positive");
}

void validate_pose(const Eigen::Matrix4d &pose, double tolerance) {
    const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
    const double err = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(err <= tolerance)) throw std::invalid_argument("pose rotation is not orthonormal");
    if (std::abs(pose(3, 0)) + std::abs(pose(3, 1)) + std::abs(pose(3, 2)) > tolerance ||
        std::abs(pose(3, 3) - 1.0) > tolerance)
        throw std::invalid_argument("pose bottom row must be 0 0 0 1");
}

namespace {

std::string next_token(std::istream &in) {
    std::string token;
    while (in >> token) {
        if (token[0] != '#') return token;
        std::string rest;
        std::getline(in, rest);
    }
    throw std::runtime_error("truncated PGM header");
}

}  // namespace

DepthImage read_depth_pgm(const std::filesystem::path &path, double depth_scale) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    if (next_token(in) != "P5") throw std::runtime_error(path.string() + ": not a binary PGM");
    const int width = std::stoi(next_token(in));
    const int height = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    in.get();  // single whitespace before the raster
    if (width < 1 || height < 1) throw std::runtime_error(path.string() + ": bad image size");
    if (maxval < 256) throw std::runtime_error(path.string() + ": expected a 16-bit PGM");

    DepthImage depth(width, height);
    std::vector<unsigned char> raw(static_cast<size_t>(depth.pixels()) * 2);
    if (!in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw std::runtime_error(path.string() + ": truncated raster");
    for (size_t i = 0; i < depth.data.size(); ++i) {
        const unsigned value = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
        depth.data[i] = static_cast<float>(value / depth_scale);
    }
    return depth;
}

void write_depth_pgm(const std::filesystem::path &path, const DepthImage &depth, double depth_scale) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "P5\n" << depth.width << ' ' << depth.height << "\n65535\n";
    std::vector<unsigned char> raw(depth.data.size() * 2);
    for (size_t i = 0; i < depth.data.size(); ++i) {
        const double scaled = std::round(static_cast<double>(depth.data[i]) * depth_scale);
        const auto value = static_cast<unsigned>(std::clamp(scaled, 0.0, 65535.0));
        raw[2 * i] = static_cast<unsigned char>(value >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(value & 0xFF);
    }
    out.write(reinterpret_cast<const char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<Eigen::Matrix4d> read_trajectory(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trajectory " + path.string());
    std::vector<Eigen::Matrix4d> poses;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Eigen::Matrix4d pose;
        for (int r = 0; r < 4; ++r) {
            if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": truncated pose block");
            std::istringstream row(line);
            for (int c = 0; c < 4; ++c) {
                if (!(row >> pose(r, c))) throw std::runtime_error(path.string() + ": malformed pose row");
            }
        }
        validate_pose(pose, 1e-5);
        poses.push_back(pose);
    }
    return poses;
}

void write_trajectory(const std::filesystem::path &path, const std::vector<Eigen::Matrix4d> &poses) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.precision(17);
    for (size_t i = 0; i < poses.size(); ++i) {
        out << i << '\n';
        for (int r = 0; r < 4; ++r)
            out << poses[i](r, 0) << ' ' << poses[i](r, 1) << ' ' << poses[i](r, 2) << ' ' << poses[i](r, 3) << '\n';
    }
}

Eigen::Matrix4d read_pose(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose " + path.string());
    std::vector<double> numbers;
    double v;
    while (in >> v) numbers.push_back(v);
    if (numbers.size() == 17) numbers.erase(numbers.begin());
    if (numbers.size() != 16) throw std::runtime_error(path.string() + ": expected a 4x4 pose");
    Eigen::Matrix4d pose;
    for (int k = 0; k < 16; ++k) pose(k / 4, k % 4) = numbers[static_cast<size_t>(k)];
    validate_pose(pose, 1e-5);
    return pose;
}

CameraFile read_intrinsics(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open intrinsics " + path.string());
    CameraFile camera;
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        camera.intrinsics.fx = j.at("fx").get<double>();
        camera.intrinsics.fy = j.at("fy").get<double>();
        camera.intrinsics.cx = j.at("cx").get<double>();
        camera.intrinsics.cy = j.at("cy").get<double>();
        camera.intrinsics.width = j.at("width").get<int>();
        camera.intrinsics.height = j.at("height").get<int>();
        camera.depth_scale = j.value("depth_scale", 1000.0);
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    camera.intrinsics.validate();
    if (!(camera.depth_scale > 0)) throw std::runtime_error(path.string() + ": depth_scale must be positive");
    return camera;
}

void write_intrinsics(const std::filesystem::path &path, const CameraFile &camera) {
    const nlohmann::json j = {{"fx", camera.intrinsics.fx},         {"fy", camera.intrinsics.fy},
                              {"cx", camera.intrinsics.cx},         {"cy", camera.intrinsics.cy},
                              {"width", camera.intrinsics.width},   {"height", camera.intrinsics.height},
                              {"depth_scale", camera.depth_scale}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

std::filesystem::path depth_frame_path(const std::filesystem::path &dataset, int index) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d.pgm", index);
    return dataset / "depth" / name;
}

}  // namespace ash
