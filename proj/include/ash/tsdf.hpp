#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ash/camera.hpp"
#include "ash/hashmap.hpp"
#include "ash/image.hpp"
#include "ash/mesh.hpp"
#include "ash/point_cloud.hpp"

namespace ash {

enum class AllocationMode {
    /// Blocks crossed by the viewing ray within ±trunc of each depth sample.
    Fast,
    /// The 27 blocks around the block hit by each depth sample.
    Complete,
};

enum class SdfDistance {
    /// depth reading minus camera-frame z of the voxel.
    ProjectiveZ,
    /// Same difference measured along the viewing ray.
    RayLength,
};

/// Stored TSDF values are clamped metric distances in [-trunc, trunc], not
/// normalized to [-1, 1].
struct TsdfConfig {
    double voxel_size = 0.0058;
    int block_resolution = 8;
    double trunc = 0.04;
    float frame_weight = 1.0f;
    float max_weight = 64.0f;
    AllocationMode allocation = AllocationMode::Fast;
    SdfDistance distance = SdfDistance::ProjectiveZ;
    bool with_color = false;
    /// Starting capacity of the block map; it grows on demand.
    int64_t initial_blocks = 4096;

    double block_size() const { return voxel_size * block_resolution; }
    int64_t voxels_per_block() const {
        return int64_t{block_resolution} * block_resolution * block_resolution;
    }
    void validate() const;

    static TsdfConfig fast();
    /// 16^3 blocks with neighborhood allocation and color.
    static TsdfConfig complete();
};

using ColorImage = Image<Eigen::Vector3f>;

struct Frame {
    /// Meters; 0 marks a missing reading.
    DepthImage depth;
    Intrinsics intrinsics;
    /// Camera-to-world.
    Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
    double depth_min = 0.2;
    double depth_max = 3.0;
    /// Optional RGB in [0, 1], same size as depth when present.
    ColorImage color;

    void validate() const;
};

inline int32_t floor_div(int32_t a, int32_t b) {
    const int32_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

inline Eigen::Vector3i block_of(const Eigen::Vector3d &x, const TsdfConfig &config) {
    const double b = config.block_size();
    return {static_cast<int32_t>(std::floor(x.x() / b)), static_cast<int32_t>(std::floor(x.y() / b)),
            static_cast<int32_t>(std::floor(x.z() / b))};
}

/// Local voxel of x inside `block`, each component clamped to [0, l) to
/// absorb rounding at block faces.
inline Eigen::Vector3i voxel_of(const Eigen::Vector3d &x, const Eigen::Vector3i &block, const TsdfConfig &config) {
    const double s = config.voxel_size;
    const Eigen::Vector3d origin = block.cast<double>() * config.block_size();
    Eigen::Vector3i v;
    for (int k = 0; k < 3; ++k) {
        const auto c = static_cast<int32_t>(std::floor((x[k] - origin[k]) / s));
        v[k] = std::clamp(c, 0, config.block_resolution - 1);
    }
    return v;
}

/// One weighted-mean update of a voxel; w is capped at max_weight.
inline void fuse_voxel(float &d, float &w, float dj, float wj, float max_weight) {
    d = (w * d + wj * dj) / (w + wj);
    w = std::min(w + wj, max_weight);
}

/// Blocks of edge `block_size` crossed by the segment a-b, in traversal order.
std::vector<Eigen::Vector3i> segment_blocks(const Eigen::Vector3d &a, const Eigen::Vector3d &b, double block_size);

/// Blocks that the allocation rule of `config.allocation` requests for
/// pixel (u, v). Appends to `out`; invalid or clipped pixels add nothing.
void pixel_block_candidates(const Frame &frame, const TsdfConfig &config, int u, int v,
                            std::vector<Eigen::Vector3i> &out);

enum class RaycastMode { Global, Local };

struct RaycastOptions {
    RaycastMode mode = RaycastMode::Global;
    int max_steps = 256;
    double depth_min = 0.2;
    double depth_max = 3.0;
    /// Bound each ray by the projected extent of the active blocks.
    bool use_range_image = true;
};

struct RaycastResult {
    /// Camera-frame z of the first zero crossing; 0 where mask is 0.
    DepthImage depth;
    Image<uint8_t> mask;
    /// World-space TSDF gradient direction at hits.
    Image<Eigen::Vector3f> normals;
};

/// Sparse TSDF volume. Blocks of l^3 voxels live in a global hash map from
/// block coordinate to an interleaved (tsdf, weight) float payload, voxel
/// (x, y, z) at offset 2 * (x + l * (y + l * z)). A per-frame local map from
/// block coordinate to global buffer index is rebuilt by allocate_blocks.
class VoxelBlockGrid {
public:
    explicit VoxelBlockGrid(TsdfConfig config = {}, int workers = 0, Backend backend = Backend::Generic);

    const TsdfConfig &config() const { return config_; }
    int workers() const { return workers_; }
    void set_workers(int workers);

    /// Activates this frame's blocks through the local map, then the global
    /// map, and returns their global buffer indices (one per distinct block).
    std::vector<BufIndex> allocate_blocks(const Frame &frame);

    void integrate(const Frame &frame, std::span<const BufIndex> active_blocks);
    /// allocate_blocks followed by integrate.
    void integrate(const Frame &frame);

    /// Rebuilds the local map from the global blocks inside the viewing
    /// frustum, for local-mode raycasts of a volume with no current frame.
    void build_frustum_local_map(const Intrinsics &intrinsics, const Eigen::Matrix4d &pose, double depth_min,
                                 double depth_max);

    RaycastResult raycast(const Intrinsics &intrinsics, const Eigen::Matrix4d &pose,
                          const RaycastOptions &options = {}) const;

    TriangleMesh extract_mesh() const;
    /// Every zero-crossing edge vertex with a valid pair of endpoints, with
    /// gradient normals. No faces.
    PointCloud extract_points() const;

    int64_t block_count() const { return global_.size(); }
    const HashMap &global_map() const { return global_; }
    HashMap &global_map() { return global_; }
    const std::optional<HashMap> &local_map() const { return local_; }

    /// (tsdf, weight) pairs of one block, 2 * l^3 floats.
    std::span<float> block_data(BufIndex index);
    std::span<const float> block_data(BufIndex index) const;
    /// RGB triples of one block; empty without color.
    std::span<float> block_color(BufIndex index);
    std::span<const float> block_color(BufIndex index) const;

    /// (tsdf, weight) of a global voxel coordinate, if its block exists.
    std::optional<std::pair<float, float>> voxel(const Eigen::Vector3i &global_voxel) const;

    /// Snapshot: the block map container followed by a trailer holding the
    /// TSDF configuration.
    void save(const std::filesystem::path &path) const;
    static VoxelBlockGrid load(const std::filesystem::path &path, int workers = 0);

private:
    VoxelBlockGrid(TsdfConfig config, int workers, HashMap global);
    static ValueSchema schema_for(const TsdfConfig &config);

    TsdfConfig config_;
    int workers_;
    HashMap global_;
    std::optional<HashMap> local_;
};

// Synthetic scenes.

/// Depth frame of the plane z = plane_z (world) seen from `pose`.
Frame render_plane(double plane_z, const Intrinsics &intrinsics, const Eigen::Matrix4d &pose);

/// Depth frame of a sphere of `radius` centered at `center`, background 0.
Frame render_sphere(const Eigen::Vector3d &center, double radius, const Intrinsics &intrinsics,
                    const Eigen::Matrix4d &pose);

/// Camera-to-world poses of cameras looking down +z from near the origin,
/// offset by a few centimeters frame to frame.
std::vector<Eigen::Matrix4d> plane_trajectory(int frames);

/// Cameras on a sphere of radius `distance` around `center`, all looking at it.
std::vector<Eigen::Matrix4d> orbit_trajectory(const Eigen::Vector3d &center, double distance, int frames);

/// Camera-to-world pose at `eye` looking at `target`.
Eigen::Matrix4d look_at(const Eigen::Vector3d &eye, const Eigen::Vector3d &target);

/// Fills every block within trunc of the zero set of `sdf` inside the box
/// [lo, hi] with the clamped signed distance at voxel centers and weight 1.
void fill_sdf(VoxelBlockGrid &grid, const std::function<double(const Eigen::Vector3d &)> &sdf,
              const Eigen::Vector3d &lo, const Eigen::Vector3d &hi);

}  // namespace ash
