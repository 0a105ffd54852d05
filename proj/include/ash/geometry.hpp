#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ash/hashmap.hpp"
#include "ash/point_cloud.hpp"

namespace ash {

/// floor(p / s) per component. Rounds toward negative infinity.
inline Eigen::Vector3i quantize(const Eigen::Vector3d &p, double s) {
    return {static_cast<int32_t>(std::floor(p.x() / s)), static_cast<int32_t>(std::floor(p.y() / s)),
            static_cast<int32_t>(std::floor(p.z() / s))};
}

struct VoxelDownsampleResult {
    /// Unique voxel coordinates, one per occupied voxel.
    std::vector<Eigen::Vector3i> voxels;
    /// For each voxel, the input index of its representative point.
    std::vector<int64_t> indices;
};

/// Keeps one point per occupied voxel of edge `voxel_size`. Which of the
/// co-voxel points survives depends on parallel insertion order.
VoxelDownsampleResult voxel_downsample(std::span<const Eigen::Vector3d> points, double voxel_size,
                                       int workers = 0, Backend backend = Backend::Generic);

/// Same, returning the surviving points with their colors and normals.
PointCloud voxel_downsample(const PointCloud &cloud, double voxel_size, int workers = 0,
                            Backend backend = Backend::Generic);

/// Number of lattice offsets in [-r, r]^3.
inline int64_t neighbor_count(int radius) {
    const int64_t side = 2 * radius + 1;
    return side * side * side;
}

/// Offset number `o` of a radius-r neighborhood; x varies fastest and
/// o = neighbor_count(r) / 2 is the center.
inline Eigen::Vector3i neighbor_offset(int64_t o, int radius) {
    const int64_t side = 2 * radius + 1;
    return {static_cast<int32_t>(o % side) - radius, static_cast<int32_t>((o / side) % side) - radius,
            static_cast<int32_t>(o / (side * side)) - radius};
}

/// Looks up every lattice neighbor in [-r, r]^3 (center included) of each
/// coordinate. The result is laid out row-major: entry
/// j * neighbor_count(r) + o holds offset o of coordinate j.
BatchResult radius_neighbors(const HashMap &map, std::span<const Eigen::Vector3i> coords, int radius);

struct CubeEmbedding {
    /// Cell corners; corner c sits at base + (c & 1, (c >> 1) & 1, (c >> 2) & 1).
    std::vector<std::array<Eigen::Vector3i, 8>> corners;
    std::vector<std::array<double, 8>> weights;
};

/// Embeds each point in the lattice cell of spacing g that contains it,
/// with trilinear interpolation weights for the 8 corners.
CubeEmbedding cube_embed(std::span<const Eigen::Vector3d> points, double grid_spacing, int workers = 0);

/// Elements of k2 (duplicates kept, order kept) whose key occurs in k1.
std::vector<int32_t> set_intersection(std::span<const int32_t> k1, std::span<const int32_t> k2, int arity,
                                      int workers = 0);

}  // namespace ash
