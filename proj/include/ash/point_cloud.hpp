#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace ash {

/// Positions in meters, with optional per-point colors (RGB in [0, 1]) and
/// normals. Attribute arrays are either empty or as long as positions.
struct PointCloud {
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::Vector3f> colors;
    std::vector<Eigen::Vector3d> normals;

    size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }
    bool has_colors() const { return !colors.empty(); }
    bool has_normals() const { return !normals.empty(); }

    /// Throws std::invalid_argument when an attribute length is off.
    void validate() const;
};

/// Flat int32 view over packed lattice coordinates, usable as a key batch.
inline std::span<const int32_t> as_key_batch(std::span<const Eigen::Vector3i> coords) {
    static_assert(sizeof(Eigen::Vector3i) == 3 * sizeof(int32_t));
    return {coords.empty() ? nullptr : coords.front().data(), coords.size() * 3};
}
inline std::span<const int32_t> as_key_batch(const std::vector<Eigen::Vector3i> &coords) {
    return as_key_batch(std::span<const Eigen::Vector3i>(coords));
}

}  // namespace ash
