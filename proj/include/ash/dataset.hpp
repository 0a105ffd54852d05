#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "ash/camera.hpp"
#include "ash/image.hpp"

namespace ash {

/// 16-bit binary PGM (P5, maxval 65535, most significant byte first).
/// Raw value / depth_scale gives meters; 0 stays 0 (invalid).
DepthImage read_depth_pgm(const std::filesystem::path &path, double depth_scale = 1000.0);
void write_depth_pgm(const std::filesystem::path &path, const DepthImage &depth, double depth_scale = 1000.0);

/// Text trajectory: per frame, one line with the frame index followed by
/// four lines of a row-major camera-to-world matrix.
std::vector<Eigen::Matrix4d> read_trajectory(const std::filesystem::path &path);
void write_trajectory(const std::filesystem::path &path, const std::vector<Eigen::Matrix4d> &poses);

/// A single pose: 16 numbers, optionally preceded by a frame index.
Eigen::Matrix4d read_pose(const std::filesystem::path &path);

struct CameraFile {
    Intrinsics intrinsics;
    double depth_scale = 1000.0;
};

/// JSON object {fx, fy, cx, cy, width, height, depth_scale}.
CameraFile read_intrinsics(const std::filesystem::path &path);
void write_intrinsics(const std::filesystem::path &path, const CameraFile &camera);

/// Depth frame path inside a dataset directory: depth/%06d.pgm.
std::filesystem::path depth_frame_path(const std::filesystem::path &dataset, int index);

}  // namespace ash
