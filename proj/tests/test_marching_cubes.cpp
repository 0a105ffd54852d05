#include <doctest.h>

#include <Eigen/Geometry>

#include <map>
#include <random>
#include <set>

#include "ash/tsdf.hpp"

using namespace ash;

namespace {

TsdfConfig config(double s, int l = 8) {
    TsdfConfig c;
    c.voxel_size = s;
    c.block_resolution = l;
    c.trunc = 4 * s;
    c.initial_blocks = 64;
    return c;
}

/// Maps each undirected edge to the number of triangles using it.
std::map<std::pair<int, int>, int> edge_use(const TriangleMesh &mesh) {
    std::map<std::pair<int, int>, int> use;
    for (const auto &t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            ++use[{std::min(a, b), std::max(a, b)}];
        }
    return use;
}

bool watertight(const TriangleMesh &mesh) {
    for (const auto &[edge, n] : edge_use(mesh))
        if (n != 2) return false;
    return !mesh.triangles.empty();
}

void check_well_formed(const TriangleMesh &mesh) {
    const auto m = static_cast<int>(mesh.vertices.size());
    std::vector<int> used(mesh.vertices.size(), 0);
    for (const auto &t : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            REQUIRE(t[k] >= 0);
            REQUIRE(t[k] < m);
            used[static_cast<size_t>(t[k])] = 1;
        }
        CHECK(t[0] != t[1]);
        CHECK(t[1] != t[2]);
        CHECK(t[0] != t[2]);
    }
    CHECK(std::count(used.begin(), used.end(), 0) == 0);
    std::set<std::tuple<double, double, double>> positions;
    for (const auto &v : mesh.vertices) positions.emplace(v.x(), v.y(), v.z());
    CHECK(positions.size() == mesh.vertices.size());
    CHECK(mesh.normals.size() == mesh.vertices.size());
}

void check_inside_blocks(const VoxelBlockGrid &grid, const std::vector<Eigen::Vector3d> &points) {
    std::set<std::tuple<int, int, int>> blocks;
    for (BufIndex i : grid.global_map().active_indices()) {
        const auto k = grid.global_map().key_at(i);
        blocks.emplace(k[0], k[1], k[2]);
    }
    for (const auto &p : points) {
        const Eigen::Vector3i b = block_of(p, grid.config());
        CHECK(blocks.count({b.x(), b.y(), b.z()}) == 1);
    }
}

}  // namespace

TEST_CASE("empty grid gives an empty mesh and cloud") {
    const VoxelBlockGrid grid(config(0.01), 1);
    CHECK(grid.extract_mesh().empty());
    CHECK(grid.extract_points().empty());
}

TEST_CASE("planar field puts vertices exactly on the plane") {
    for (int l : {8, 16}) {
        VoxelBlockGrid grid(config(0.01, l), 2);
        const double z0 = 0.1234;
        fill_sdf(grid, [&](const Eigen::Vector3d &x) { return x.z() - z0; }, {-0.2, -0.15, -0.1}, {0.2, 0.15, 0.4});
        const TriangleMesh mesh = grid.extract_mesh();
        REQUIRE(mesh.vertices.size() > 100);
        for (const auto &v : mesh.vertices) CHECK(std::abs(v.z() - z0) <= 1e-6);
        for (const auto &n : mesh.normals) CHECK(n.z() > 0.999);
        check_well_formed(mesh);
        check_inside_blocks(grid, mesh.vertices);

        const PointCloud points = grid.extract_points();
        REQUIRE(points.size() > 0);
        for (const auto &p : points.positions) CHECK(std::abs(p.z() - z0) <= 1e-6);
        CHECK(points.normals.size() == points.size());
        CHECK(points.size() <= 3 * mesh.vertices.size());
    }
}

TEST_CASE("plane mesh interior edges are shared by two triangles") {
    VoxelBlockGrid grid(config(0.01), 1);
    fill_sdf(grid, [](const Eigen::Vector3d &x) { return x.z() - 0.0371; }, {-0.1, -0.1, -0.1}, {0.1, 0.1, 0.1});
    const TriangleMesh mesh = grid.extract_mesh();
    int boundary = 0;
    for (const auto &[edge, n] : edge_use(mesh)) {
        CHECK(n <= 2);
        boundary += n == 1;
    }
    CHECK(boundary > 0);
}

TEST_CASE("sphere mesh is watertight with outward normals") {
    const double s = 0.01, radius = 0.5;
    VoxelBlockGrid grid(config(s), 1);
    fill_sdf(grid, [&](const Eigen::Vector3d &x) { return x.norm() - radius; }, Eigen::Vector3d::Constant(-0.6),
             Eigen::Vector3d::Constant(0.6));
    const TriangleMesh mesh = grid.extract_mesh();
    check_well_formed(mesh);
    CHECK(watertight(mesh));
    int64_t within = 0;
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Eigen::Vector3d &v = mesh.vertices[i];
        within += std::abs(v.norm() - radius) <= s;
        CHECK(mesh.normals[i].dot(v.normalized()) > 0.9);
    }
    CHECK(within == static_cast<int64_t>(mesh.vertices.size()));

    // Triangle winding agrees with the normals.
    int64_t agree = 0;
    for (const auto &t : mesh.triangles) {
        const Eigen::Vector3d a = mesh.vertices[static_cast<size_t>(t[0])];
        const Eigen::Vector3d n = (mesh.vertices[static_cast<size_t>(t[1])] - a)
                                      .cross(mesh.vertices[static_cast<size_t>(t[2])] - a);
        agree += n.dot(a) > 0;
    }
    CHECK(agree == static_cast<int64_t>(mesh.triangles.size()));

    const PointCloud points = grid.extract_points();
    CHECK(points.size() > 0);
    CHECK(points.size() <= 3 * mesh.vertices.size());
}

TEST_CASE("random closed fields give watertight meshes") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> pos(-0.12, 0.12);
    std::uniform_real_distribution<double> rad(0.03, 0.08);
    std::uniform_real_distribution<double> phase(0, 6.28);
    const double s = 0.01;
    for (int trial = 0; trial < 40; ++trial) {
        CAPTURE(trial);
        std::vector<std::pair<Eigen::Vector3d, double>> balls;
        for (int i = 0; i < 5; ++i) balls.emplace_back(Eigen::Vector3d(pos(rng), pos(rng), pos(rng)), rad(rng));
        const double px = phase(rng), py = phase(rng);
        // Sphere union plus a ripple smaller than a voxel, which produces
        // ambiguous cube faces.
        auto sdf = [&](const Eigen::Vector3d &x) {
            double d = 1e9;
            for (const auto &[c, r] : balls) d = std::min(d, (x - c).norm() - r);
            return d + 0.3 * s * std::sin(150 * x.x() + px) * std::sin(170 * x.y() + py);
        };
        VoxelBlockGrid grid(config(s), 1);
        fill_sdf(grid, sdf, Eigen::Vector3d::Constant(-0.3), Eigen::Vector3d::Constant(0.3));
        const TriangleMesh mesh = grid.extract_mesh();
        check_well_formed(mesh);
        CHECK(watertight(mesh));
        check_inside_blocks(grid, mesh.vertices);
    }
}

TEST_CASE("unobserved voxels produce no surface") {
    VoxelBlockGrid grid(config(0.01), 1);
    fill_sdf(grid, [](const Eigen::Vector3d &x) { return x.z() - 0.05; }, {-0.1, -0.1, -0.1}, {0.1, 0.1, 0.2});
    const int64_t before = static_cast<int64_t>(grid.extract_mesh().vertices.size());
    // Zero the weight of every voxel with x < 0.
    const int l = grid.config().block_resolution;
    for (BufIndex i : grid.global_map().active_indices()) {
        const auto key = grid.global_map().key_at(i);
        auto data = grid.block_data(i);
        for (int z = 0; z < l; ++z)
            for (int y = 0; y < l; ++y)
                for (int x = 0; x < l; ++x)
                    if (key[0] * l + x < 0) data[static_cast<size_t>(2 * (x + l * (y + l * z)) + 1)] = 0;
    }
    const TriangleMesh mesh = grid.extract_mesh();
    CHECK(static_cast<int64_t>(mesh.vertices.size()) < before);
    for (const auto &v : mesh.vertices) CHECK(v.x() >= 0.005 - 1e-9);
    for (const auto &p : grid.extract_points().positions) CHECK(p.x() >= 0.005 - 1e-9);
}

TEST_CASE("mesh extraction is deterministic across worker counts") {
    auto run = [](int workers) {
        VoxelBlockGrid grid(config(0.02), workers);
        fill_sdf(grid, [](const Eigen::Vector3d &x) { return x.norm() - 0.3; }, Eigen::Vector3d::Constant(-0.4),
                 Eigen::Vector3d::Constant(0.4));
        const TriangleMesh m = grid.extract_mesh();
        std::set<std::tuple<double, double, double>> v;
        for (const auto &p : m.vertices) v.emplace(p.x(), p.y(), p.z());
        return std::make_pair(v, m.triangles.size());
    };
    CHECK(run(1) == run(3));
}
