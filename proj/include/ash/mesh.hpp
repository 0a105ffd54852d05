#pragma once

#include <vector>

#include <Eigen/Core>

namespace ash {

struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3i> triangles;
    std::vector<Eigen::Vector3d> normals;

    bool empty() const { return vertices.empty() && triangles.empty(); }
};

}  // namespace ash
