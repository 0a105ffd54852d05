#pragma once

#include <Eigen/Core>

namespace ash {

/// Pinhole intrinsics; pixel (u, v) has its center at integer coordinates.
struct Intrinsics {
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;
    int width = 640;
    int height = 480;

    /// Camera-frame point to (u, v, z).
    Eigen::Vector3d project(const Eigen::Vector3d &p) const {
        return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy, p.z()};
    }
    /// Pixel plus z-depth to camera-frame point.
    Eigen::Vector3d unproject(double u, double v, double z) const {
        return {(u - cx) * z / fx, (v - cy) * z / fy, z};
    }
    void validate() const;
};

/// Throws std::invalid_argument when the rotation block is not
/// orthonormal within `tolerance`.
void validate_pose(const Eigen::Matrix4d &pose, double tolerance = 1e-6);

/// Inverse of a rigid transform.
inline Eigen::Matrix4d rigid_inverse(const Eigen::Matrix4d &pose) {
    Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
    inv.topLeftCorner<3, 3>() = pose.topLeftCorner<3, 3>().transpose();
    inv.topRightCorner<3, 1>() = -inv.topLeftCorner<3, 3>() * pose.topRightCorner<3, 1>();
    return inv;
}

}  // namespace ash
