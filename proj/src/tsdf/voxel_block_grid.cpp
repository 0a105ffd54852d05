#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ash/parallel.hpp"
#include "ash/serialize.hpp"
#include "ash/tsdf.hpp"

namespace ash {

void TsdfConfig::validate() const {
    if (!(voxel_size > 0)) throw std::invalid_argument("voxel size must be positive");
    if (block_resolution != 8 && block_resolution != 16)
        throw std::invalid_argument("block resolution must be 8 or 16");
    if (!(trunc > voxel_size)) throw std::invalid_argument("truncation must exceed the voxel size");
    if (!(frame_weight > 0) || !(max_weight >= frame_weight))
        throw std::invalid_argument("weights must satisfy 0 < frame weight <= max weight");
    if (initial_blocks < 1) throw std::invalid_argument("initial block count must be positive");
}

TsdfConfig TsdfConfig::fast() { return TsdfConfig{}; }

TsdfConfig TsdfConfig::complete() {
    TsdfConfig config;
    config.block_resolution = 16;
    config.allocation = AllocationMode::Complete;
    config.with_color = true;
    return config;
}

void Frame::validate() const {
    intrinsics.validate();
    validate_pose(pose);
    if (!(depth_min < depth_max)) throw std::invalid_argument("depth_min must be below depth_max");
    if (depth.width != intrinsics.width || depth.height != intrinsics.height)
        throw std::invalid_argument("depth image size does not match the intrinsics");
    if (color.width != 0 && (color.width != depth.width || color.height != depth.height))
        throw std::invalid_argument("color image size does not match the depth image");
}

std::vector<Eigen::Vector3i> segment_blocks(const Eigen::Vector3d &a, const Eigen::Vector3d &b, double block_size) {
    const Eigen::Vector3d pa = a / block_size;
    const Eigen::Vector3d pb = b / block_size;
    Eigen::Vector3i cur(static_cast<int>(std::floor(pa.x())), static_cast<int>(std::floor(pa.y())),
                        static_cast<int>(std::floor(pa.z())));
    const Eigen::Vector3i end(static_cast<int>(std::floor(pb.x())), static_cast<int>(std::floor(pb.y())),
                              static_cast<int>(std::floor(pb.z())));
    const Eigen::Vector3d dir = pb - pa;
    constexpr double inf = std::numeric_limits<double>::infinity();

    Eigen::Vector3i step;
    Eigen::Vector3d t_max, t_delta;
    for (int k = 0; k < 3; ++k) {
        if (dir[k] > 0) {
            step[k] = 1;
            t_max[k] = (cur[k] + 1 - pa[k]) / dir[k];
            t_delta[k] = 1.0 / dir[k];
        } else if (dir[k] < 0) {
            step[k] = -1;
            t_max[k] = (cur[k] - pa[k]) / dir[k];
            t_delta[k] = -1.0 / dir[k];
        } else {
            step[k] = 0;
            t_max[k] = inf;
            t_delta[k] = inf;
        }
    }

    std::vector<Eigen::Vector3i> blocks{cur};
    const int limit = (end - cur).cwiseAbs().sum();
    for (int i = 0; i < limit && cur != end; ++i) {
        int axis = 0;
        if (t_max[1] < t_max[axis]) axis = 1;
        if (t_max[2] < t_max[axis]) axis = 2;
        if (t_max[axis] > 1.0) break;
        cur[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        blocks.push_back(cur);
    }
    return blocks;
}

void pixel_block_candidates(const Frame &frame, const TsdfConfig &config, int u, int v,
                            std::vector<Eigen::Vector3i> &out) {
    const float depth = frame.depth.at(u, v);
    if (!(depth > 0) || depth < frame.depth_min || depth > frame.depth_max) return;
    const Eigen::Matrix3d r = frame.pose.topLeftCorner<3, 3>();
    const Eigen::Vector3d t = frame.pose.topRightCorner<3, 1>();
    if (config.allocation == AllocationMode::Fast) {
        const double near = std::max(depth - config.trunc, 1e-3);
        const double far = depth + config.trunc;
        const Eigen::Vector3d a = r * frame.intrinsics.unproject(u, v, near) + t;
        const Eigen::Vector3d b = r * frame.intrinsics.unproject(u, v, far) + t;
        for (const Eigen::Vector3i &block : segment_blocks(a, b, config.block_size())) out.push_back(block);
        return;
    }
    const Eigen::Vector3i center = block_of(r * frame.intrinsics.unproject(u, v, depth) + t, config);
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) out.push_back(center + Eigen::Vector3i(dx, dy, dz));
}

ValueSchema VoxelBlockGrid::schema_for(const TsdfConfig &config) {
    ValueSchema schema{ValueDesc{config.voxels_per_block() * 2, 4}};
    if (config.with_color) schema.push_back(ValueDesc{config.voxels_per_block() * 3, 4});
    return schema;
}

namespace {

const TsdfConfig &validated(const TsdfConfig &config) {
    config.validate();
    return config;
}

}  // namespace

VoxelBlockGrid::VoxelBlockGrid(TsdfConfig config, int workers, Backend backend)
    : config_(validated(config)),
      workers_(workers),
      global_(config.initial_blocks, KeySchema{3}, schema_for(config), backend, MapOptions{workers}) {}

VoxelBlockGrid::VoxelBlockGrid(TsdfConfig config, int workers, HashMap global)
    : config_(validated(config)), workers_(workers), global_(std::move(global)) {
    global_.set_workers(workers);
}

void VoxelBlockGrid::set_workers(int workers) {
    workers_ = workers;
    global_.set_workers(workers);
    if (local_) local_->set_workers(workers);
}

std::span<float> VoxelBlockGrid::block_data(BufIndex index) {
    const auto n = static_cast<size_t>(config_.voxels_per_block() * 2);
    return global_.value_view<float>(0).subspan(static_cast<size_t>(index) * n, n);
}

std::span<const float> VoxelBlockGrid::block_data(BufIndex index) const {
    const auto n = static_cast<size_t>(config_.voxels_per_block() * 2);
    return global_.value_view<float>(0).subspan(static_cast<size_t>(index) * n, n);
}

std::span<float> VoxelBlockGrid::block_color(BufIndex index) {
    if (!config_.with_color) return {};
    const auto n = static_cast<size_t>(config_.voxels_per_block() * 3);
    return global_.value_view<float>(1).subspan(static_cast<size_t>(index) * n, n);
}

std::span<const float> VoxelBlockGrid::block_color(BufIndex index) const {
    if (!config_.with_color) return {};
    const auto n = static_cast<size_t>(config_.voxels_per_block() * 3);
    return global_.value_view<float>(1).subspan(static_cast<size_t>(index) * n, n);
}

std::optional<std::pair<float, float>> VoxelBlockGrid::voxel(const Eigen::Vector3i &global_voxel) const {
    const int l = config_.block_resolution;
    const Eigen::Vector3i block(floor_div(global_voxel.x(), l), floor_div(global_voxel.y(), l),
                                floor_div(global_voxel.z(), l));
    const BufIndex index = global_.find_one(std::span<const int32_t>(block.data(), 3));
    if (index < 0) return std::nullopt;
    const Eigen::Vector3i local = global_voxel - block * l;
    const auto offset = static_cast<size_t>(local.x() + l * (local.y() + l * local.z()));
    const auto data = block_data(index);
    return std::make_pair(data[2 * offset], data[2 * offset + 1]);
}

std::vector<BufIndex> VoxelBlockGrid::allocate_blocks(const Frame &frame) {
    frame.validate();
    const int height = frame.depth.height;
    const int chunks = std::max(1, std::min(resolve_workers(workers_) * 4, height));
    std::vector<std::vector<Eigen::Vector3i>> per_chunk(static_cast<size_t>(chunks));
    parallel_for_each(chunks, workers_, [&](int64_t c) {
        auto &out = per_chunk[static_cast<size_t>(c)];
        const int v0 = static_cast<int>(height * c / chunks);
        const int v1 = static_cast<int>(height * (c + 1) / chunks);
        for (int v = v0; v < v1; ++v)
            for (int u = 0; u < frame.depth.width; ++u) pixel_block_candidates(frame, config_, u, v, out);
    });
    std::vector<Eigen::Vector3i> candidates;
    for (auto &chunk : per_chunk) candidates.insert(candidates.end(), chunk.begin(), chunk.end());

    const MapOptions options{workers_};
    local_.emplace(std::max<int64_t>(1, static_cast<int64_t>(candidates.size())), KeySchema{3},
                   ValueSchema{ValueDesc{1, 4}}, global_.backend(), options);
    if (candidates.empty()) return {};

    // Collapse raw per-pixel blocks to the distinct set before touching the
    // persistent map.
    local_->activate(as_key_batch(candidates));
    const std::vector<BufIndex> local_indices = local_->active_indices();
    const auto n = static_cast<int64_t>(local_indices.size());
    std::vector<int32_t> keys(static_cast<size_t>(n * 3));
    for (int64_t j = 0; j < n; ++j) {
        const auto key = local_->key_at(local_indices[static_cast<size_t>(j)]);
        std::copy(key.begin(), key.end(), keys.begin() + j * 3);
    }

    const BatchResult existing = global_.find(keys);
    const BatchResult activated = global_.activate(keys);
    auto local_values = local_->value_view<int32_t>(0);
    parallel_for_each(n, workers_, [&](int64_t j) {
        const BufIndex g = activated.indices[static_cast<size_t>(j)];
        local_values[static_cast<size_t>(local_indices[static_cast<size_t>(j)])] = g;
        if (existing.masks[static_cast<size_t>(j)]) return;
        auto data = block_data(g);
        std::fill(data.begin(), data.end(), 0.0f);
        auto color = block_color(g);
        std::fill(color.begin(), color.end(), 0.0f);
    });
    return activated.indices;
}

void VoxelBlockGrid::integrate(const Frame &frame) {
    const std::vector<BufIndex> active = allocate_blocks(frame);
    integrate(frame, active);
}

void VoxelBlockGrid::build_frustum_local_map(const Intrinsics &intrinsics, const Eigen::Matrix4d &pose,
                                             double depth_min, double depth_max) {
    intrinsics.validate();
    validate_pose(pose);
    const Eigen::Matrix4d world_to_cam = rigid_inverse(pose);
    const Eigen::Matrix3d r = world_to_cam.topLeftCorner<3, 3>();
    const Eigen::Vector3d t = world_to_cam.topRightCorner<3, 1>();
    const double bs = config_.block_size();
    const double radius = bs * std::sqrt(3.0) / 2;

    std::vector<int32_t> keys;
    std::vector<int32_t> values;
    for (BufIndex index : global_.active_indices()) {
        const auto key = global_.key_at(index);
        const Eigen::Vector3d center =
            (Eigen::Vector3d(key[0], key[1], key[2]) + Eigen::Vector3d::Constant(0.5)) * bs;
        const Eigen::Vector3d pc = r * center + t;
        if (pc.z() + radius < depth_min || pc.z() - radius > depth_max) continue;
        if (pc.z() > radius) {
            const Eigen::Vector3d uv = intrinsics.project(pc);
            const double margin_u = intrinsics.fx * radius / (pc.z() - radius);
            const double margin_v = intrinsics.fy * radius / (pc.z() - radius);
            if (uv.x() < -margin_u || uv.x() > intrinsics.width - 1 + margin_u) continue;
            if (uv.y() < -margin_v || uv.y() > intrinsics.height - 1 + margin_v) continue;
        }
        keys.insert(keys.end(), key.begin(), key.end());
        values.push_back(index);
    }
    local_.emplace(std::max<int64_t>(1, static_cast<int64_t>(values.size())), KeySchema{3},
                   ValueSchema{ValueDesc{1, 4}}, global_.backend(), MapOptions{workers_});
    local_->insert(keys, {as_value_batch(values)});
}

namespace {

constexpr char kTrailerMagic[4] = {'T', 'S', 'D', 'F'};
constexpr uint32_t kTrailerVersion = 1;

template <typename T>
void put(std::ostream &out, T v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T get(std::istream &in) {
    T v{};
    if (!in.read(reinterpret_cast<char *>(&v), sizeof(T))) throw std::runtime_error("truncated TSDF trailer");
    return v;
}

}  // namespace

void VoxelBlockGrid::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    save_map(global_, out);
    out.write(kTrailerMagic, 4);
    put<uint32_t>(out, kTrailerVersion);
    put<double>(out, config_.voxel_size);
    put<int32_t>(out, config_.block_resolution);
    put<double>(out, config_.trunc);
    put<float>(out, config_.frame_weight);
    put<float>(out, config_.max_weight);
    put<uint8_t>(out, static_cast<uint8_t>(config_.allocation));
    put<uint8_t>(out, static_cast<uint8_t>(config_.distance));
    put<uint8_t>(out, config_.with_color ? 1 : 0);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

VoxelBlockGrid VoxelBlockGrid::load(const std::filesystem::path &path, int workers) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    HashMap map = load_map(in, Backend::Generic, MapOptions{workers});
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kTrailerMagic, 4) != 0)
        throw std::runtime_error(path.string() + ": not a TSDF volume snapshot");
    if (get<uint32_t>(in) != kTrailerVersion) throw std::runtime_error(path.string() + ": unsupported TSDF version");
    TsdfConfig config;
    config.voxel_size = get<double>(in);
    config.block_resolution = get<int32_t>(in);
    config.trunc = get<double>(in);
    config.frame_weight = get<float>(in);
    config.max_weight = get<float>(in);
    const auto allocation = get<uint8_t>(in);
    const auto distance = get<uint8_t>(in);
    if (allocation > 1 || distance > 1) throw std::runtime_error(path.string() + ": bad TSDF trailer");
    config.allocation = static_cast<AllocationMode>(allocation);
    config.distance = static_cast<SdfDistance>(distance);
    config.with_color = get<uint8_t>(in) != 0;
    config.initial_blocks = std::max<int64_t>(1, map.capacity());
    try {
        config.validate();
    } catch (const std::invalid_argument &e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    if (map.arity() != 3 || map.value_schema() != schema_for(config))
        throw std::runtime_error(path.string() + ": block layout does not match the TSDF trailer");
    return VoxelBlockGrid(config, workers, std::move(map));
}

}  // namespace ash
