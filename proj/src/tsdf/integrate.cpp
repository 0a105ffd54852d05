#include "ash/parallel.hpp"
#include "ash/tsdf.hpp"

namespace ash {

void VoxelBlockGrid::integrate(const Frame &frame, std::span<const BufIndex> active_blocks) {
    frame.validate();
    const Eigen::Matrix4d world_to_cam = rigid_inverse(frame.pose);
    const Eigen::Matrix3d r = world_to_cam.topLeftCorner<3, 3>();
    const Eigen::Vector3d t = world_to_cam.topRightCorner<3, 1>();
    const Intrinsics &intr = frame.intrinsics;
    const int l = config_.block_resolution;
    const double s = config_.voxel_size;
    const auto mu = static_cast<float>(config_.trunc);
    const float wj = config_.frame_weight;
    const float w_max = config_.max_weight;
    const bool use_color = config_.with_color && frame.color.width > 0;

    parallel_for_each(static_cast<int64_t>(active_blocks.size()), workers_, [&](int64_t j) {
        const BufIndex index = active_blocks[static_cast<size_t>(j)];
        const auto key = global_.key_at(index);
        const Eigen::Vector3d origin(key[0] * l, key[1] * l, key[2] * l);
        auto data = block_data(index);
        auto color = block_color(index);
        for (int z = 0; z < l; ++z)
            for (int y = 0; y < l; ++y)
                for (int x = 0; x < l; ++x) {
                    const Eigen::Vector3d world = (origin + Eigen::Vector3d(x + 0.5, y + 0.5, z + 0.5)) * s;
                    const Eigen::Vector3d pc = r * world + t;
                    const double zc = pc.z();
                    if (zc < frame.depth_min || zc > frame.depth_max) continue;
                    const Eigen::Vector3d uv = intr.project(pc);
                    const auto u = static_cast<int>(std::floor(uv.x() + 0.5));
                    const auto v = static_cast<int>(std::floor(uv.y() + 0.5));
                    if (!frame.depth.contains(u, v)) continue;
                    const double depth = frame.depth.at(u, v);
                    if (!(depth > 0) || depth < frame.depth_min || depth > frame.depth_max) continue;

                    double sdf = depth - zc;
                    if (config_.distance == SdfDistance::RayLength) sdf *= pc.norm() / zc;
                    if (sdf < -config_.trunc) continue;
                    const float tsdf = std::min(static_cast<float>(sdf), mu);

                    const size_t offset = static_cast<size_t>(x + l * (y + l * z));
                    float &d = data[2 * offset];
                    float &w = data[2 * offset + 1];
                    if (use_color) {
                        const Eigen::Vector3f &c = frame.color.at(u, v);
                        for (int k = 0; k < 3; ++k) {
                            float &stored = color[3 * offset + static_cast<size_t>(k)];
                            stored = (w * stored + wj * c[k]) / (w + wj);
                        }
                    }
                    fuse_voxel(d, w, tsdf, wj, w_max);
                }
    });
}

}  // namespace ash
