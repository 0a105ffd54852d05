#include "ash/geometry.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "ash/parallel.hpp"

namespace ash {

void PointCloud::validate() const {
    if (!colors.empty() && colors.size() != positions.size())
        throw std::invalid_argument("point cloud has " + std::to_string(colors.size()) + " colors for " +
                                    std::to_string(positions.size()) + " points");
    if (!normals.empty() && normals.size() != positions.size())
        throw std::invalid_argument("point cloud has " + std::to_string(normals.size()) + " normals for " +
                                    std::to_string(positions.size()) + " points");
}

VoxelDownsampleResult voxel_downsample(std::span<const Eigen::Vector3d> points, double voxel_size,
                                       int workers, Backend backend) {
    if (!(voxel_size > 0)) throw std::invalid_argument("voxel size must be positive");
    VoxelDownsampleResult out;
    const auto n = static_cast<int64_t>(points.size());
    if (n == 0) return out;
    if (n > std::numeric_limits<int32_t>::max()) throw std::invalid_argument("too many points");

    std::vector<Eigen::Vector3i> coords(points.size());
    std::vector<int32_t> point_ids(points.size());
    parallel_for_each(n, workers, [&](int64_t j) {
        coords[static_cast<size_t>(j)] = quantize(points[static_cast<size_t>(j)], voxel_size);
        point_ids[static_cast<size_t>(j)] = static_cast<int32_t>(j);
    });

    HashMap map(n, KeySchema{3}, {ValueDesc{1, sizeof(int32_t)}}, backend, MapOptions{workers});
    const BatchResult result = map.insert(as_key_batch(coords), {as_value_batch(point_ids)});

    const auto stored = map.value_view<const int32_t>(0);
    out.voxels.reserve(static_cast<size_t>(map.size()));
    out.indices.reserve(static_cast<size_t>(map.size()));
    for (int64_t j = 0; j < n; ++j) {
        if (!result.masks[static_cast<size_t>(j)]) continue;
        out.voxels.push_back(coords[static_cast<size_t>(j)]);
        out.indices.push_back(stored[static_cast<size_t>(result.indices[static_cast<size_t>(j)])]);
    }
    return out;
}

PointCloud voxel_downsample(const PointCloud &cloud, double voxel_size, int workers, Backend backend) {
    cloud.validate();
    const VoxelDownsampleResult picked = voxel_downsample(cloud.positions, voxel_size, workers, backend);
    PointCloud out;
    out.positions.reserve(picked.indices.size());
    for (int64_t i : picked.indices) {
        const auto k = static_cast<size_t>(i);
        out.positions.push_back(cloud.positions[k]);
        if (cloud.has_colors()) out.colors.push_back(cloud.colors[k]);
        if (cloud.has_normals()) out.normals.push_back(cloud.normals[k]);
    }
    return out;
}

BatchResult radius_neighbors(const HashMap &map, std::span<const Eigen::Vector3i> coords, int radius) {
    if (radius < 0) throw std::invalid_argument("neighbor radius must be non-negative");
    if (map.arity() != 3) throw std::invalid_argument("radius_neighbors needs a map with 3D keys");
    const int64_t per = neighbor_count(radius);
    const auto n = static_cast<int64_t>(coords.size());

    std::vector<Eigen::Vector3i> queries(static_cast<size_t>(n * per));
    parallel_for_each(n, map.options().workers, [&](int64_t j) {
        for (int64_t o = 0; o < per; ++o)
            queries[static_cast<size_t>(j * per + o)] = coords[static_cast<size_t>(j)] + neighbor_offset(o, radius);
    });
    return map.find(as_key_batch(queries));
}

CubeEmbedding cube_embed(std::span<const Eigen::Vector3d> points, double grid_spacing, int workers) {
    if (!(grid_spacing > 0)) throw std::invalid_argument("grid spacing must be positive");
    CubeEmbedding out;
    out.corners.resize(points.size());
    out.weights.resize(points.size());
    parallel_for_each(static_cast<int64_t>(points.size()), workers, [&](int64_t j) {
        const auto k = static_cast<size_t>(j);
        const Eigen::Vector3d g = points[k] / grid_spacing;
        const Eigen::Vector3d base = g.array().floor();
        const Eigen::Vector3d t = g - base;
        const Eigen::Vector3i b = base.cast<int32_t>();
        for (int c = 0; c < 8; ++c) {
            const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
            out.corners[k][static_cast<size_t>(c)] = b + Eigen::Vector3i(dx, dy, dz);
            out.weights[k][static_cast<size_t>(c)] =
                    (dx ? t.x() : 1 - t.x()) * (dy ? t.y() : 1 - t.y()) * (dz ? t.z() : 1 - t.z());
        }
    });
    return out;
}

std::vector<int32_t> set_intersection(std::span<const int32_t> k1, std::span<const int32_t> k2, int arity,
                                      int workers) {
    if (arity < 1) throw std::invalid_argument("key arity must be positive");
    if (k1.size() % static_cast<size_t>(arity) || k2.size() % static_cast<size_t>(arity))
        throw std::invalid_argument("key batch length is not a multiple of arity");
    std::vector<int32_t> out;
    const auto n1 = static_cast<int64_t>(k1.size()) / arity;
    if (n1 == 0 || k2.empty()) return out;

    HashSet set(n1, KeySchema{arity}, Backend::Generic, MapOptions{workers});
    set.insert(k1);
    const BatchResult hits = set.find(k2);
    out.reserve(static_cast<size_t>(hits.count() * arity));
    for (size_t j = 0; j < hits.size(); ++j) {
        if (!hits.masks[j]) continue;
        const auto key = k2.subspan(j * static_cast<size_t>(arity), static_cast<size_t>(arity));
        out.insert(out.end(), key.begin(), key.end());
    }
    return out;
}

}  // namespace ash
