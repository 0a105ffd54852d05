#include <array>
#include <limits>

#include "ash/parallel.hpp"
#include "ash/tsdf.hpp"

namespace ash {
namespace {

enum class Sample { NoBlock, NoWeight, Valid };

// Per-thread TSDF reader with a small direct-mapped block cache.
class Sampler {
public:
    Sampler(const VoxelBlockGrid &grid, RaycastMode mode)
        : grid_(grid),
          local_(mode == RaycastMode::Local ? &*grid.local_map() : nullptr),
          l_(grid.config().block_resolution),
          s_(grid.config().voxel_size) {
        if (local_) local_values_ = local_->value_view<int32_t>(0);
        for (auto &entry : cache_) entry.index = -2;
    }

    BufIndex find_block(const Eigen::Vector3i &block) {
        const auto slot = static_cast<size_t>(
            (static_cast<uint32_t>(block.x()) * 73856093u ^ static_cast<uint32_t>(block.y()) * 19349663u ^
             static_cast<uint32_t>(block.z()) * 83492791u) &
            (kCacheSize - 1));
        Entry &entry = cache_[slot];
        if (entry.index != -2 && entry.block == block) return entry.index;
        const std::span<const int32_t> key(block.data(), 3);
        BufIndex index;
        if (local_) {
            const BufIndex li = local_->find_one(key);
            index = li < 0 ? -1 : local_values_[static_cast<size_t>(li)];
        } else {
            index = grid_.global_map().find_one(key);
        }
        entry.block = block;
        entry.index = index;
        return index;
    }

    // Returns a pointer to (tsdf, weight), or null when the block is absent.
    const float *voxel(const Eigen::Vector3i &v) {
        const Eigen::Vector3i block(floor_div(v.x(), l_), floor_div(v.y(), l_), floor_div(v.z(), l_));
        const BufIndex index = find_block(block);
        if (index < 0) return nullptr;
        const Eigen::Vector3i local = v - block * l_;
        return grid_.block_data(index).data() + 2 * (local.x() + l_ * (local.y() + l_ * local.z()));
    }

    // Trilinear TSDF at x when all 8 surrounding voxels are observed,
    // otherwise the nearest voxel.
    Sample sample(const Eigen::Vector3d &x, float &d) {
        const Eigen::Vector3d g = x / s_ - Eigen::Vector3d::Constant(0.5);
        const Eigen::Vector3d fl = g.array().floor();
        const Eigen::Vector3i base = fl.cast<int>();
        const Eigen::Vector3d f = g - fl;
        double acc = 0;
        bool complete = true;
        for (int c = 0; c < 8 && complete; ++c) {
            const Eigen::Vector3i off(c & 1, (c >> 1) & 1, (c >> 2) & 1);
            const float *p = voxel(base + off);
            if (!p || !(p[1] > 0)) {
                complete = false;
                break;
            }
            const double wx = off.x() ? f.x() : 1 - f.x();
            const double wy = off.y() ? f.y() : 1 - f.y();
            const double wz = off.z() ? f.z() : 1 - f.z();
            acc += wx * wy * wz * p[0];
        }
        if (complete) {
            d = static_cast<float>(acc);
            return Sample::Valid;
        }
        const Eigen::Vector3d n = (x / s_).array().floor();
        const Eigen::Vector3i nearest = n.cast<int>();
        const float *p = voxel(nearest);
        if (!p) return Sample::NoBlock;
        if (!(p[1] > 0)) return Sample::NoWeight;
        d = p[0];
        return Sample::Valid;
    }

private:
    static constexpr size_t kCacheSize = 16;
    struct Entry {
        Eigen::Vector3i block;
        BufIndex index;
    };

    const VoxelBlockGrid &grid_;
    const HashMap *local_;
    std::span<const int32_t> local_values_;
    int l_;
    double s_;
    std::array<Entry, kCacheSize> cache_;
};

constexpr int kTile = 8;

struct RangeImage {
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<float> near, far;

    /// [near, far] of the tile holding (u, v); empty when no block projects there.
    std::optional<std::pair<float, float>> range(int u, int v) const {
        const size_t i = static_cast<size_t>((v / kTile) * tiles_x + u / kTile);
        if (!(near[i] <= far[i])) return std::nullopt;
        return std::make_pair(near[i], far[i]);
    }
};

// Per-tile [near, far] camera-z bounds of the projected block boxes.
RangeImage build_range_image(const VoxelBlockGrid &grid, std::span<const BufIndex> blocks,
                             const Intrinsics &intr, const Eigen::Matrix4d &world_to_cam, double depth_min,
                             double depth_max) {
    RangeImage range;
    range.tiles_x = (intr.width + kTile - 1) / kTile;
    range.tiles_y = (intr.height + kTile - 1) / kTile;
    const auto tiles = static_cast<size_t>(range.tiles_x * range.tiles_y);
    range.near.assign(tiles, std::numeric_limits<float>::infinity());
    range.far.assign(tiles, -std::numeric_limits<float>::infinity());
    const double bs = grid.config().block_size();
    const Eigen::Matrix3d r = world_to_cam.topLeftCorner<3, 3>();
    const Eigen::Vector3d t = world_to_cam.topRightCorner<3, 1>();

    for (BufIndex index : blocks) {
        const auto key = grid.global_map().key_at(index);
        double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
        double umin = zmin, umax = zmax, vmin = zmin, vmax = zmax;
        bool behind = false;
        for (int c = 0; c < 8; ++c) {
            const Eigen::Vector3d corner =
                Eigen::Vector3d(key[0] + (c & 1), key[1] + ((c >> 1) & 1), key[2] + ((c >> 2) & 1)) * bs;
            const Eigen::Vector3d pc = r * corner + t;
            zmin = std::min(zmin, pc.z());
            zmax = std::max(zmax, pc.z());
            if (pc.z() <= 1e-6) {
                behind = true;
                continue;
            }
            const Eigen::Vector3d uv = intr.project(pc);
            umin = std::min(umin, uv.x());
            umax = std::max(umax, uv.x());
            vmin = std::min(vmin, uv.y());
            vmax = std::max(vmax, uv.y());
        }
        if (zmax < depth_min || zmin > depth_max) continue;
        int tx0 = 0, tx1 = range.tiles_x - 1, ty0 = 0, ty1 = range.tiles_y - 1;
        if (!behind) {
            // Pixel centers sit at integers; a pixel sees the box when its
            // center lies inside the projected footprint.
            const double u0 = std::ceil(umin), u1 = std::floor(umax);
            const double v0 = std::ceil(vmin), v1 = std::floor(vmax);
            if (u1 < 0 || v1 < 0 || u0 > intr.width - 1 || v0 > intr.height - 1 || u0 > u1 || v0 > v1) continue;
            tx0 = static_cast<int>(std::max(0.0, u0)) / kTile;
            tx1 = static_cast<int>(std::min<double>(intr.width - 1, u1)) / kTile;
            ty0 = static_cast<int>(std::max(0.0, v0)) / kTile;
            ty1 = static_cast<int>(std::min<double>(intr.height - 1, v1)) / kTile;
        }
        const auto znear = static_cast<float>(std::max(zmin, depth_min));
        const auto zfar = static_cast<float>(std::min(zmax, depth_max));
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx) {
                const auto i = static_cast<size_t>(ty * range.tiles_x + tx);
                range.near[i] = std::min(range.near[i], znear);
                range.far[i] = std::max(range.far[i], zfar);
            }
    }
    return range;
}

// Ray parameter at which the ray leaves the block containing x.
double block_exit(const Eigen::Vector3d &x, const Eigen::Vector3d &dir, double t, double bs) {
    double exit = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        if (dir[k] == 0) continue;
        const double cell = std::floor(x[k] / bs);
        const double plane = (dir[k] > 0 ? cell + 1 : cell) * bs;
        exit = std::min(exit, t + (plane - x[k]) / dir[k]);
    }
    return exit;
}

}  // namespace

RaycastResult VoxelBlockGrid::raycast(const Intrinsics &intr, const Eigen::Matrix4d &pose,
                                      const RaycastOptions &options) const {
    intr.validate();
    validate_pose(pose);
    if (options.mode == RaycastMode::Local && !local_)
        throw std::logic_error("local raycast needs a local map; allocate or build one first");

    RaycastResult result;
    result.depth = DepthImage(intr.width, intr.height, 0.0f);
    result.mask = Image<uint8_t>(intr.width, intr.height, 0);
    result.normals = Image<Eigen::Vector3f>(intr.width, intr.height, Eigen::Vector3f::Zero());

    std::vector<BufIndex> blocks;
    if (options.mode == RaycastMode::Local) {
        const auto values = local_->value_view<int32_t>(0);
        for (BufIndex li : local_->active_indices()) blocks.push_back(values[static_cast<size_t>(li)]);
    } else {
        blocks = global_.active_indices();
    }
    if (blocks.empty()) return result;

    const Eigen::Matrix4d world_to_cam = rigid_inverse(pose);
    std::optional<RangeImage> range;
    if (options.use_range_image)
        range = build_range_image(*this, blocks, intr, world_to_cam, options.depth_min, options.depth_max);

    const Eigen::Matrix3d rot = pose.topLeftCorner<3, 3>();
    const Eigen::Vector3d origin = pose.topRightCorner<3, 1>();
    const double s = config_.voxel_size;
    const double bs = config_.block_size();

    parallel_for(intr.height, workers_, [&](int64_t v0, int64_t v1) {
        Sampler sampler(*this, options.mode);
        for (auto v = static_cast<int>(v0); v < v1; ++v) {
            for (int u = 0; u < intr.width; ++u) {
                double t = options.depth_min, t_end = options.depth_max;
                if (range) {
                    const auto bounds = range->range(u, v);
                    if (!bounds) continue;
                    t = std::max<double>(t, bounds->first);
                    t_end = std::min<double>(t_end, bounds->second);
                }
                // Parameterized by camera z: x(t) = origin + t * dir.
                const Eigen::Vector3d dir_cam = intr.unproject(u, v, 1.0);
                const Eigen::Vector3d dir = rot * dir_cam;
                const double scale = dir_cam.norm();

                bool have_prev = false;
                float prev_d = 0;
                double prev_t = 0;
                for (int step = 0; step < options.max_steps && t <= t_end; ++step) {
                    const Eigen::Vector3d x = origin + t * dir;
                    float d = 0;
                    const Sample status = sampler.sample(x, d);
                    if (status == Sample::NoBlock) {
                        have_prev = false;
                        t = std::max(block_exit(x, dir, t, bs), t + 1e-3 * s / scale) + 1e-4 * s / scale;
                        continue;
                    }
                    if (status == Sample::NoWeight) {
                        have_prev = false;
                        t += s / scale;
                        continue;
                    }
                    if (have_prev && prev_d > 0 && d <= 0) {
                        const double hit = prev_t + (t - prev_t) * prev_d / (prev_d - d);
                        result.depth.at(u, v) = static_cast<float>(hit);
                        result.mask.at(u, v) = 1;
                        const Eigen::Vector3d xh = origin + hit * dir;
                        Eigen::Vector3f grad = Eigen::Vector3f::Zero();
                        bool ok = true;
                        for (int k = 0; k < 3 && ok; ++k) {
                            Eigen::Vector3d e = Eigen::Vector3d::Zero();
                            e[k] = s;
                            float dp = 0, dm = 0;
                            ok = sampler.sample(xh + e, dp) == Sample::Valid &&
                                 sampler.sample(xh - e, dm) == Sample::Valid;
                            grad[k] = dp - dm;
                        }
                        if (ok && grad.norm() > 0) result.normals.at(u, v) = grad.normalized();
                        break;
                    }
                    have_prev = true;
                    prev_d = d;
                    prev_t = t;
                    t += std::max<double>(d, 0.5 * s) / scale;
                }
            }
        }
    });
    return result;
}

}  // namespace ash
