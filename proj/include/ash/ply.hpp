#pragma once

#include <filesystem>

#include "ash/mesh.hpp"
#include "ash/point_cloud.hpp"

namespace ash {

enum class PlyFormat { Ascii, BinaryLittleEndian };

void write_ply(const std::filesystem::path &path, const PointCloud &cloud,
               PlyFormat format = PlyFormat::BinaryLittleEndian);
void write_ply(const std::filesystem::path &path, const TriangleMesh &mesh,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

/// Reads x/y/z (float or double) plus optional red/green/blue and
/// nx/ny/nz vertex properties. Faces, if present, are ignored.
PointCloud read_ply_points(const std::filesystem::path &path);

/// Reads vertices and triangle faces.
TriangleMesh read_ply_mesh(const std::filesystem::path &path);

}  // namespace ash
