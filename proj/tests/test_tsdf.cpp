#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

#include <unistd.h>

#include "ash/tsdf.hpp"

using namespace ash;

namespace {

using Coord = std::tuple<int, int, int>;
Coord tup(const Eigen::Vector3i &v) { return {v.x(), v.y(), v.z()}; }

TsdfConfig small_config() {
    TsdfConfig c;
    c.voxel_size = 0.01;
    c.block_resolution = 8;
    c.trunc = 0.04;
    c.initial_blocks = 64;
    return c;
}

Intrinsics small_camera() { return Intrinsics{60, 60, 19.5, 14.5, 40, 30}; }

Eigen::Matrix4d translation(double x, double y, double z) {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topRightCorner<3, 1>() << x, y, z;
    return t;
}

std::set<Coord> block_set(const VoxelBlockGrid &grid) {
    std::set<Coord> out;
    for (BufIndex i : grid.global_map().active_indices()) {
        const auto k = grid.global_map().key_at(i);
        out.emplace(k[0], k[1], k[2]);
    }
    return out;
}

/// Slab test of segment a-b against the box [lo, lo + size]^3 grown by eps.
bool segment_hits_box(const Eigen::Vector3d &a, const Eigen::Vector3d &b, const Eigen::Vector3d &lo, double size,
                      double eps) {
    double t0 = 0, t1 = 1;
    const Eigen::Vector3d d = b - a;
    for (int k = 0; k < 3; ++k) {
        const double l = lo[k] - eps, h = lo[k] + size + eps;
        if (std::abs(d[k]) < 1e-15) {
            if (a[k] < l || a[k] > h) return false;
            continue;
        }
        double ta = (l - a[k]) / d[k], tb = (h - a[k]) / d[k];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

std::set<Coord> brute_segment_blocks(const Eigen::Vector3d &a, const Eigen::Vector3d &b, double bs, double eps) {
    std::set<Coord> out;
    const Eigen::Vector3d lo = a.cwiseMin(b), hi = a.cwiseMax(b);
    for (int z = static_cast<int>(std::floor(lo.z() / bs)) - 1; z <= static_cast<int>(std::floor(hi.z() / bs)) + 1; ++z)
        for (int y = static_cast<int>(std::floor(lo.y() / bs)) - 1; y <= static_cast<int>(std::floor(hi.y() / bs)) + 1;
             ++y)
            for (int x = static_cast<int>(std::floor(lo.x() / bs)) - 1;
                 x <= static_cast<int>(std::floor(hi.x() / bs)) + 1; ++x)
                if (segment_hits_box(a, b, Eigen::Vector3d(x, y, z) * bs, bs, eps)) out.emplace(x, y, z);
    return out;
}

bool subset(const std::set<Coord> &a, const std::set<Coord> &b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("block and voxel addressing examples") {
    TsdfConfig c = small_config();
    CHECK(block_of({0, 0, 0}, c) == Eigen::Vector3i::Zero());
    CHECK(voxel_of({0, 0, 0}, {0, 0, 0}, c) == Eigen::Vector3i::Zero());

    TsdfConfig cfg = TsdfConfig::fast();
    cfg.voxel_size = 0.0058;
    cfg.block_resolution = 8;
    const Eigen::Vector3d x(0.050, 0, 0);
    CHECK(block_of(x, cfg) == Eigen::Vector3i(1, 0, 0));
    CHECK(voxel_of(x, block_of(x, cfg), cfg) == Eigen::Vector3i(0, 0, 0));

    const Eigen::Vector3d neg(-0.001, -0.001, -0.001);
    CHECK(block_of(neg, c) == Eigen::Vector3i(-1, -1, -1));
    CHECK(voxel_of(neg, block_of(neg, c), c) == Eigen::Vector3i(7, 7, 7));

    CHECK(floor_div(-1, 8) == -1);
    CHECK(floor_div(-8, 8) == -1);
    CHECK(floor_div(-9, 8) == -2);
    CHECK(floor_div(7, 8) == 0);
}

TEST_CASE("block and voxel decomposition brackets the point") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-3, 3);
    for (int l : {8, 16}) {
        TsdfConfig c = small_config();
        c.block_resolution = l;
        c.voxel_size = 0.0058;
        const double s = c.voxel_size, bs = c.block_size();
        for (int i = 0; i < 20000; ++i) {
            const Eigen::Vector3d x(d(rng), d(rng), d(rng));
            const Eigen::Vector3i b = block_of(x, c);
            const Eigen::Vector3i v = voxel_of(x, b, c);
            for (int k = 0; k < 3; ++k) {
                REQUIRE(v[k] >= 0);
                REQUIRE(v[k] < l);
                const double lo = b[k] * bs + v[k] * s;
                // Allow one rounding step at the upper face.
                CHECK(lo <= x[k] + 1e-12);
                CHECK(x[k] < lo + s + 1e-12);
            }
        }
    }
}

TEST_CASE("config validation") {
    TsdfConfig c = small_config();
    CHECK_NOTHROW(c.validate());
    c.block_resolution = 4;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.trunc = c.voxel_size;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.voxel_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = small_config();
    c.max_weight = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(TsdfConfig::complete().block_resolution == 16);
    CHECK(TsdfConfig::complete().with_color);
}

TEST_CASE("frame validation") {
    Frame f = render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity());
    CHECK_NOTHROW(f.validate());
    f.depth_min = 3.5;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f = render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity());
    f.pose(0, 0) = 1.1;
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    f = render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity());
    f.depth = DepthImage(3, 3, 1.0f);
    CHECK_THROWS_AS(f.validate(), std::invalid_argument);
}

TEST_CASE("segment traversal matches a brute-force box test") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    const double bs = 0.08;
    for (int i = 0; i < 500; ++i) {
        const Eigen::Vector3d a(d(rng), d(rng), d(rng));
        const Eigen::Vector3d b = a + 0.3 * Eigen::Vector3d(d(rng), d(rng), d(rng));
        const auto got = segment_blocks(a, b, bs);
        std::set<Coord> set;
        for (const auto &g : got) set.insert(tup(g));
        CHECK(set.size() == got.size());
        CHECK(subset(brute_segment_blocks(a, b, bs, -1e-9), set));
        CHECK(subset(set, brute_segment_blocks(a, b, bs, 1e-9)));
        CHECK(got.front() == block_of(a, TsdfConfig{.voxel_size = bs / 8}));
        // Consecutive blocks are face neighbors.
        for (size_t k = 1; k < got.size(); ++k) CHECK((got[k] - got[k - 1]).cwiseAbs().sum() == 1);
    }
    CHECK(segment_blocks({0.01, 0.01, 0.01}, {0.01, 0.01, 0.01}, bs).size() == 1);
}

TEST_CASE("empty depth frame allocates nothing") {
    VoxelBlockGrid grid(small_config(), 2);
    Frame f = render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity());
    std::fill(f.depth.data.begin(), f.depth.data.end(), 0.f);
    CHECK(grid.allocate_blocks(f).empty());
    CHECK(grid.block_count() == 0);
    grid.integrate(f);
    CHECK(grid.block_count() == 0);
}

TEST_CASE("plane allocation matches a sequential oracle and stays in the slab") {
    const TsdfConfig c = small_config();
    const Intrinsics k = small_camera();
    const Frame f = render_plane(1.0, k, Eigen::Matrix4d::Identity());
    VoxelBlockGrid grid(c, 2);
    const auto active = grid.allocate_blocks(f);
    const std::set<Coord> got = block_set(grid);
    CHECK(active.size() == got.size());

    std::set<Coord> inner, outer;
    for (int v = 0; v < k.height; ++v)
        for (int u = 0; u < k.width; ++u) {
            const double z = f.depth.at(u, v);
            const Eigen::Vector3d a = k.unproject(u, v, z - c.trunc), b = k.unproject(u, v, z + c.trunc);
            for (const Coord &x : brute_segment_blocks(a, b, c.block_size(), -1e-9)) inner.insert(x);
            for (const Coord &x : brute_segment_blocks(a, b, c.block_size(), 1e-9)) outer.insert(x);
        }
    CHECK(subset(inner, got));
    CHECK(subset(got, outer));

    const double bs = c.block_size();
    for (const auto &[x, y, z] : got) {
        CHECK(z * bs >= 1 - c.trunc - bs - 1e-9);
        CHECK((z + 1) * bs <= 1 + c.trunc + bs + 1e-9);
    }
}

TEST_CASE("complete allocation covers the block neighborhood of every surface point") {
    TsdfConfig c = small_config();
    c.allocation = AllocationMode::Complete;
    const Intrinsics k = small_camera();
    const Frame f = render_plane(1.0, k, translation(0.003, -0.02, 0));
    VoxelBlockGrid grid(c, 1);
    grid.allocate_blocks(f);
    std::set<Coord> expect;
    for (int v = 0; v < k.height; ++v)
        for (int u = 0; u < k.width; ++u) {
            const Eigen::Vector3d p = k.unproject(u, v, f.depth.at(u, v)) + Eigen::Vector3d(0.003, -0.02, 0);
            const Eigen::Vector3i b = block_of(p, c);
            for (int o = 0; o < 27; ++o) expect.insert(tup(b + Eigen::Vector3i(o % 3 - 1, o / 3 % 3 - 1, o / 9 - 1)));
        }
    CHECK(block_set(grid) == expect);
}

TEST_CASE("allocation is idempotent for a repeated frame") {
    VoxelBlockGrid grid(small_config(), 2);
    const Frame f = render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity());
    const auto first = grid.allocate_blocks(f);
    const int64_t count = grid.block_count();
    const auto second = grid.allocate_blocks(f);
    CHECK(grid.block_count() == count);
    CHECK(std::set<BufIndex>(first.begin(), first.end()) == std::set<BufIndex>(second.begin(), second.end()));
}

TEST_CASE("local map values point at the global payloads") {
    VoxelBlockGrid grid(small_config(), 2);
    const Frame f = render_plane(1.2, small_camera(), plane_trajectory(3)[1]);
    const auto active = grid.allocate_blocks(f);
    REQUIRE(grid.local_map().has_value());
    const HashMap &local = *grid.local_map();
    const auto values = local.value_view<int32_t>(0);
    std::set<BufIndex> via_local;
    for (BufIndex i : local.active_indices()) {
        const auto key = local.key_at(i);
        const BufIndex g = grid.global_map().find_one(key);
        REQUIRE(g >= 0);
        CHECK(values[static_cast<size_t>(i)] == g);
        via_local.insert(g);
    }
    CHECK(via_local == std::set<BufIndex>(active.begin(), active.end()));
}

TEST_CASE("new blocks start at zero distance and zero weight") {
    VoxelBlockGrid grid(small_config(), 1);
    const auto active = grid.allocate_blocks(render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity()));
    for (BufIndex i : active)
        for (float x : grid.block_data(i)) REQUIRE(x == 0.f);
}

TEST_CASE("single voxel update on the central ray") {
    TsdfConfig c = small_config();
    c.allocation = AllocationMode::Complete;
    // Voxel (0, 0, 97) has its center at (0.005, 0.005, 0.975); this pose
    // puts it on the optical axis at camera z = 0.98 with the plane at 1.0.
    const Eigen::Matrix4d pose = translation(0.005, 0.005, -0.005);
    const Frame f = render_plane(0.995, small_camera(), pose);
    VoxelBlockGrid grid(c, 1);
    grid.integrate(f);
    const auto front = grid.voxel({0, 0, 97});
    REQUIRE(front.has_value());
    CHECK(front->first == doctest::Approx(0.02).epsilon(1e-4));
    CHECK(front->second == 1.f);

    // Camera z = 1.08, twice the truncation behind the surface.
    const auto behind = grid.voxel({0, 0, 107});
    REQUIRE(behind.has_value());
    CHECK(behind->second == 0.f);
    CHECK(behind->first == 0.f);
}

TEST_CASE("ray-length distance scales by the ray direction") {
    TsdfConfig c = small_config();
    c.allocation = AllocationMode::Complete;
    c.distance = SdfDistance::RayLength;
    const Eigen::Matrix4d pose = translation(0.005, 0.005, -0.005);
    VoxelBlockGrid grid(c, 1);
    grid.integrate(render_plane(0.995, small_camera(), pose));
    // On the optical axis both conventions agree.
    CHECK(grid.voxel({0, 0, 97})->first == doctest::Approx(0.02).epsilon(1e-4));
}

TEST_CASE("stored values respect truncation and weights stay bounded") {
    TsdfConfig c = small_config();
    c.max_weight = 3;
    VoxelBlockGrid grid(c, 2);
    const auto poses = plane_trajectory(6);
    for (const auto &pose : poses) grid.integrate(render_plane(1.0, small_camera(), pose));
    int64_t observed = 0;
    for (BufIndex i : grid.global_map().active_indices()) {
        const auto data = grid.block_data(i);
        for (size_t v = 0; v < data.size(); v += 2) {
            CHECK(data[v + 1] >= 0.f);
            CHECK(data[v + 1] <= 3.f);
            if (data[v + 1] > 0) {
                ++observed;
                CHECK(std::abs(data[v]) <= c.trunc + 1e-6);
            }
        }
    }
    CHECK(observed > 0);
}

TEST_CASE("an identical second frame doubles weights and keeps distances") {
    VoxelBlockGrid grid(small_config(), 2);
    const Frame f = render_plane(1.1, small_camera(), plane_trajectory(4)[2]);
    grid.integrate(f);
    std::vector<std::vector<float>> before;
    const auto indices = grid.global_map().active_indices();
    for (BufIndex i : indices) before.emplace_back(grid.block_data(i).begin(), grid.block_data(i).end());
    grid.integrate(f);
    for (size_t b = 0; b < indices.size(); ++b) {
        const auto after = grid.block_data(indices[b]);
        for (size_t v = 0; v < after.size(); v += 2) {
            CHECK(after[v + 1] == 2 * before[b][v + 1]);
            CHECK(after[v] == doctest::Approx(before[b][v]).epsilon(1e-6));
        }
    }
}

TEST_CASE("incremental fusion equals the closed-form weighted mean") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<float> dist(-0.04f, 0.04f);
    std::uniform_real_distribution<float> weight(0.1f, 3.f);
    for (int h = 0; h < 1000; ++h) {
        float d = 0, w = 0;
        double num = 0, den = 0, mag = 0;
        const int n = 1 + static_cast<int>(rng() % 20);
        for (int j = 0; j < n; ++j) {
            const float dj = dist(rng), wj = weight(rng);
            fuse_voxel(d, w, dj, wj, 1e9f);
            num += double{wj} * dj;
            den += wj;
            mag += double{wj} * std::abs(dj);
        }
        CHECK(std::abs(d - num / den) <= 1e-5 * (mag / den));
        CHECK(w == doctest::Approx(den).epsilon(1e-5));
    }
    float d = 0.01f, w = 63.5f;
    fuse_voxel(d, w, 0.02f, 1.f, 64.f);
    CHECK(w == 64.f);
}

TEST_CASE("raycast of an integrated plane") {
    TsdfConfig c = small_config();
    c.voxel_size = 0.0058;
    VoxelBlockGrid grid(c, 2);
    const Intrinsics k{80, 80, 39.5, 29.5, 80, 60};
    const auto poses = plane_trajectory(10);
    for (const auto &pose : poses) grid.integrate(render_plane(1.0, k, pose));

    const RaycastResult r = grid.raycast(k, poses[0]);
    const Frame truth = render_plane(1.0, k, poses[0]);
    int64_t valid = 0, close = 0;
    for (int v = 0; v < k.height; ++v)
        for (int u = 0; u < k.width; ++u) {
            if (!r.mask.at(u, v)) continue;
            ++valid;
            if (std::abs(r.depth.at(u, v) - truth.depth.at(u, v)) <= 2 * c.voxel_size) ++close;
            CHECK(std::abs(r.normals.at(u, v).norm() - 1.f) < 1e-3f);
        }
    CHECK(valid > (k.width * k.height) / 2);
    CHECK(close >= 0.95 * static_cast<double>(valid));
}

TEST_CASE("local and global raycasts agree on a single frame") {
    VoxelBlockGrid grid(small_config(), 2);
    const Intrinsics k = small_camera();
    const Eigen::Matrix4d pose = plane_trajectory(5)[3];
    grid.integrate(render_plane(1.0, k, pose));
    const RaycastResult global = grid.raycast(k, pose, RaycastOptions{RaycastMode::Global});
    const RaycastResult local = grid.raycast(k, pose, RaycastOptions{RaycastMode::Local});
    int64_t both = 0;
    for (int v = 0; v < k.height; ++v)
        for (int u = 0; u < k.width; ++u) {
            if (!global.mask.at(u, v) || !local.mask.at(u, v)) continue;
            ++both;
            CHECK(global.depth.at(u, v) == local.depth.at(u, v));
        }
    CHECK(both > (k.width * k.height) / 2);
}

TEST_CASE("rays that never meet a block miss") {
    VoxelBlockGrid grid(small_config(), 1);
    const Intrinsics k = small_camera();
    grid.integrate(render_plane(1.0, k, Eigen::Matrix4d::Identity()));
    // Looking down -z, away from the plane.
    Eigen::Matrix4d away = Eigen::Matrix4d::Identity();
    away(1, 1) = -1;
    away(2, 2) = -1;
    const RaycastResult r = grid.raycast(k, away);
    for (uint8_t m : r.mask.data) CHECK(m == 0);
    for (float d : r.depth.data) CHECK(d == 0.f);

    RaycastOptions no_range;
    no_range.use_range_image = false;
    const RaycastResult r2 = grid.raycast(k, away, no_range);
    for (uint8_t m : r2.mask.data) CHECK(m == 0);

    const VoxelBlockGrid empty(small_config(), 1);
    for (uint8_t m : empty.raycast(k, Eigen::Matrix4d::Identity()).mask.data) CHECK(m == 0);
}

TEST_CASE("raycast with and without the range image agree") {
    VoxelBlockGrid grid(small_config(), 2);
    const Intrinsics k = small_camera();
    const auto poses = plane_trajectory(4);
    for (const auto &p : poses) grid.integrate(render_plane(1.0, k, p));
    RaycastOptions full;
    full.use_range_image = false;
    const RaycastResult a = grid.raycast(k, poses[1]);
    const RaycastResult b = grid.raycast(k, poses[1], full);
    int64_t hits = 0;
    for (int v = 0; v < k.height; ++v)
        for (int u = 0; u < k.width; ++u)
            if (a.mask.at(u, v) && b.mask.at(u, v)) {
                ++hits;
                CHECK(std::abs(a.depth.at(u, v) - b.depth.at(u, v)) < 2 * 0.01);
            }
    CHECK(hits > (k.width * k.height) / 2);
}

TEST_CASE("integration is independent of the worker count") {
    auto run = [](int workers) {
        VoxelBlockGrid grid(small_config(), workers);
        for (const auto &p : plane_trajectory(3)) grid.integrate(render_plane(1.0, small_camera(), p));
        std::map<Coord, std::vector<float>> out;
        for (BufIndex i : grid.global_map().active_indices()) {
            const auto k = grid.global_map().key_at(i);
            out[{k[0], k[1], k[2]}] = std::vector<float>(grid.block_data(i).begin(), grid.block_data(i).end());
        }
        return out;
    };
    CHECK(run(1) == run(3));
}

TEST_CASE("color is fused alongside distance") {
    TsdfConfig c = small_config();
    c.with_color = true;
    VoxelBlockGrid grid(c, 1);
    Frame f = render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity());
    f.color = ColorImage(f.depth.width, f.depth.height, Eigen::Vector3f(0.2f, 0.4f, 0.6f));
    grid.integrate(f);
    int64_t colored = 0;
    for (BufIndex i : grid.global_map().active_indices()) {
        const auto data = grid.block_data(i);
        const auto rgb = grid.block_color(i);
        REQUIRE(rgb.size() == 3 * data.size() / 2);
        for (size_t v = 0; v < data.size() / 2; ++v)
            if (data[2 * v + 1] > 0) {
                ++colored;
                CHECK(rgb[3 * v + 1] == doctest::Approx(0.4f));
            }
    }
    CHECK(colored > 0);
    CHECK(VoxelBlockGrid(small_config(), 1).block_color(0).empty());
}

TEST_CASE("snapshot round trip") {
    const auto path = std::filesystem::temp_directory_path() / ("ash_tsdf_" + std::to_string(::getpid()) + ".bin");
    TsdfConfig c = small_config();
    c.distance = SdfDistance::RayLength;
    VoxelBlockGrid grid(c, 2);
    grid.integrate(render_plane(1.0, small_camera(), Eigen::Matrix4d::Identity()));
    grid.save(path);
    const VoxelBlockGrid back = VoxelBlockGrid::load(path, 1);
    std::filesystem::remove(path);
    CHECK(back.config().voxel_size == c.voxel_size);
    CHECK(back.config().trunc == c.trunc);
    CHECK(back.config().distance == SdfDistance::RayLength);
    CHECK(back.block_count() == grid.block_count());
    for (BufIndex i : grid.global_map().active_indices()) {
        const BufIndex j = back.global_map().find_one(grid.global_map().key_at(i));
        REQUIRE(j >= 0);
        CHECK(std::equal(grid.block_data(i).begin(), grid.block_data(i).end(), back.block_data(j).begin()));
    }
    CHECK_THROWS(VoxelBlockGrid::load("/nonexistent/grid.bin"));
}
