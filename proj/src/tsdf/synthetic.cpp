#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "ash/parallel.hpp"
#include "ash/tsdf.hpp"

namespace ash {

namespace {

template <typename Hit>
Frame render(const Intrinsics &intrinsics, const Eigen::Matrix4d &pose, Hit &&hit) {
    Frame frame;
    frame.intrinsics = intrinsics;
    frame.pose = pose;
    frame.depth = DepthImage(intrinsics.width, intrinsics.height, 0.0f);
    const Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
    const Eigen::Vector3d origin = pose.topRightCorner<3, 1>();
    for (int v = 0; v < intrinsics.height; ++v)
        for (int u = 0; u < intrinsics.width; ++u) {
            // Direction with unit camera z, so the ray parameter is the depth.
            const Eigen::Vector3d dir = r * intrinsics.unproject(u, v, 1.0);
            const double t = hit(origin, dir);
            if (t > 0) frame.depth.at(u, v) = static_cast<float>(t);
        }
    return frame;
}

}  // namespace

Frame render_plane(double plane_z, const Intrinsics &intrinsics, const Eigen::Matrix4d &pose) {
    return render(intrinsics, pose, [&](const Eigen::Vector3d &o, const Eigen::Vector3d &d) {
        if (std::abs(d.z()) < 1e-12) return -1.0;
        return (plane_z - o.z()) / d.z();
    });
}

Frame render_sphere(const Eigen::Vector3d &center, double radius, const Intrinsics &intrinsics,
                    const Eigen::Matrix4d &pose) {
    return render(intrinsics, pose, [&](const Eigen::Vector3d &o, const Eigen::Vector3d &d) {
        const Eigen::Vector3d oc = o - center;
        const double a = d.squaredNorm();
        const double b = 2 * oc.dot(d);
        const double c = oc.squaredNorm() - radius * radius;
        const double disc = b * b - 4 * a * c;
        if (disc < 0) return -1.0;
        const double sq = std::sqrt(disc);
        const double t0 = (-b - sq) / (2 * a);
        return t0 > 0 ? t0 : (-b + sq) / (2 * a);
    });
}

std::vector<Eigen::Matrix4d> plane_trajectory(int frames) {
    std::vector<Eigen::Matrix4d> poses;
    for (int i = 0; i < frames; ++i) {
        const double phase = 2 * std::numbers::pi * i / std::max(frames, 1);
        Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
        pose.topLeftCorner<3, 3>() =
            (Eigen::AngleAxisd(0.03 * std::sin(phase), Eigen::Vector3d::UnitY()) *
             Eigen::AngleAxisd(0.03 * std::cos(phase), Eigen::Vector3d::UnitX()))
                .toRotationMatrix();
        pose.topRightCorner<3, 1>() = Eigen::Vector3d(0.05 * std::cos(phase), 0.05 * std::sin(phase), 0.0);
        poses.push_back(pose);
    }
    return poses;
}

Eigen::Matrix4d look_at(const Eigen::Vector3d &eye, const Eigen::Vector3d &target) {
    const Eigen::Vector3d z = (target - eye).normalized();
    Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
    if (std::abs(z.dot(up)) > 0.99) up = Eigen::Vector3d::UnitY();
    const Eigen::Vector3d x = z.cross(up).normalized();
    const Eigen::Vector3d y = z.cross(x);
    Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
    pose.block<3, 1>(0, 0) = x;
    pose.block<3, 1>(0, 1) = y;
    pose.block<3, 1>(0, 2) = z;
    pose.block<3, 1>(0, 3) = eye;
    return pose;
}

std::vector<Eigen::Matrix4d> orbit_trajectory(const Eigen::Vector3d &center, double distance, int frames) {
    // Fibonacci lattice of viewing directions.
    std::vector<Eigen::Matrix4d> poses;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < frames; ++i) {
        const double y = frames == 1 ? 0.0 : 1.0 - 2.0 * (i + 0.5) / frames;
        const double ring = std::sqrt(std::max(0.0, 1.0 - y * y));
        const Eigen::Vector3d dir(ring * std::cos(golden * i), y, ring * std::sin(golden * i));
        poses.push_back(look_at(center + distance * dir, center));
    }
    return poses;
}

void fill_sdf(VoxelBlockGrid &grid, const std::function<double(const Eigen::Vector3d &)> &sdf,
              const Eigen::Vector3d &lo, const Eigen::Vector3d &hi) {
    const TsdfConfig &config = grid.config();
    const double bs = config.block_size();
    const Eigen::Vector3i b0 = block_of(lo, config);
    const Eigen::Vector3i b1 = block_of(hi, config);
    const double reach = config.trunc + bs * std::sqrt(3.0) / 2 + config.voxel_size;

    std::vector<Eigen::Vector3i> blocks;
    for (int z = b0.z(); z <= b1.z(); ++z)
        for (int y = b0.y(); y <= b1.y(); ++y)
            for (int x = b0.x(); x <= b1.x(); ++x) {
                const Eigen::Vector3d center = (Eigen::Vector3d(x, y, z) + Eigen::Vector3d::Constant(0.5)) * bs;
                if (std::abs(sdf(center)) <= reach) blocks.emplace_back(x, y, z);
            }
    if (blocks.empty()) return;

    const BatchResult result = grid.global_map().activate(as_key_batch(blocks));
    const int l = config.block_resolution;
    const auto mu = config.trunc;
    parallel_for_each(static_cast<int64_t>(blocks.size()), grid.workers(), [&](int64_t j) {
        const Eigen::Vector3i &block = blocks[static_cast<size_t>(j)];
        auto data = grid.block_data(result.indices[static_cast<size_t>(j)]);
        auto color = grid.block_color(result.indices[static_cast<size_t>(j)]);
        std::fill(color.begin(), color.end(), 0.0f);
        for (int z = 0; z < l; ++z)
            for (int y = 0; y < l; ++y)
                for (int x = 0; x < l; ++x) {
                    const Eigen::Vector3d p =
                        ((block * l + Eigen::Vector3i(x, y, z)).cast<double>() + Eigen::Vector3d::Constant(0.5)) *
                        config.voxel_size;
                    const size_t offset = static_cast<size_t>(x + l * (y + l * z));
                    data[2 * offset] = static_cast<float>(std::clamp(sdf(p), -mu, mu));
                    data[2 * offset + 1] = 1.0f;
                }
    });
}

}  // namespace ash
