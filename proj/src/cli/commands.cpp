#include "ash/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "ash/bench.hpp"
#include "ash/dataset.hpp"
#include "ash/geometry.hpp"
#include "ash/parallel.hpp"
#include "ash/ply.hpp"
#include "ash/tsdf.hpp"

namespace ash {
namespace {

namespace fs = std::filesystem;

struct Globals {
    std::string root = ".";
    int threads = 0;

    fs::path resolve(const std::string &p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : fs::path(root) / path;
    }
};

// Reads "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> read_key_values(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    std::map<std::string, std::string> entries;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(number) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        entries[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return entries;
}

double parse_double(const std::string &key, const std::string &value) {
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw std::runtime_error("config " + key + ": not a number: " + value);
    return v;
}

// Integration settings: config file first, then flags on top.
struct PipelineOptions {
    std::string config;
    std::string dataset;
    std::string out;
    std::string synthetic;
    std::optional<std::string> mode;
    std::optional<double> voxel_size;
    std::optional<int> block_resolution;
    std::optional<double> trunc;
    std::optional<double> depth_min;
    std::optional<double> depth_max;
    std::optional<int> frames;
    std::optional<std::string> distance;
};

struct Pipeline {
    fs::path dataset;
    fs::path out;
    TsdfConfig tsdf;
    double depth_min = 0.2;
    double depth_max = 3.0;
    int frames = -1;
};

void apply_mode(TsdfConfig &config, const std::string &mode) {
    if (mode == "fast") {
        config = TsdfConfig::fast();
    } else if (mode == "complete") {
        config = TsdfConfig::complete();
    } else {
        throw std::runtime_error("mode must be fast or complete, got '" + mode + "'");
    }
}

Pipeline resolve_pipeline(const PipelineOptions &o, const Globals &g) {
    std::map<std::string, std::string> kv;
    if (!o.config.empty()) kv = read_key_values(g.resolve(o.config));
    auto take = [&](const std::string &key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    Pipeline p;
    const auto file_mode = take("mode");
    apply_mode(p.tsdf, o.mode ? *o.mode : file_mode.value_or("fast"));

    auto number = [&](const std::string &key, auto flag) -> std::optional<double> {
        const auto from_file = take(key);
        if (flag) return static_cast<double>(*flag);
        if (from_file) return parse_double(key, *from_file);
        return std::nullopt;
    };
    if (auto v = number("voxel_size", o.voxel_size)) p.tsdf.voxel_size = *v;
    if (auto v = number("block_resolution", o.block_resolution)) p.tsdf.block_resolution = static_cast<int>(*v);
    if (auto v = number("trunc", o.trunc)) p.tsdf.trunc = *v;
    if (auto v = number("depth_min", o.depth_min)) p.depth_min = *v;
    if (auto v = number("depth_max", o.depth_max)) p.depth_max = *v;
    if (auto v = number("frames", o.frames)) p.frames = static_cast<int>(*v);
    if (auto v = number("max_weight", std::optional<double>{})) p.tsdf.max_weight = static_cast<float>(*v);
    if (auto v = number("frame_weight", std::optional<double>{})) p.tsdf.frame_weight = static_cast<float>(*v);
    const auto file_distance = take("distance");
    const std::string distance = o.distance ? *o.distance : file_distance.value_or("projective");
    if (distance == "projective")
        p.tsdf.distance = SdfDistance::ProjectiveZ;
    else if (distance == "ray")
        p.tsdf.distance = SdfDistance::RayLength;
    else
        throw std::runtime_error("distance must be projective or ray, got '" + distance + "'");

    const auto dataset_file = take("dataset");
    const auto out_file = take("out");
    const std::string dataset = !o.dataset.empty() ? o.dataset : dataset_file.value_or("");
    const std::string out = !o.out.empty() ? o.out : out_file.value_or("");
    if (!kv.empty()) throw std::runtime_error("unknown config key '" + kv.begin()->first + "'");
    if (dataset.empty()) throw std::runtime_error("no dataset directory given");
    if (out.empty()) throw std::runtime_error("no output snapshot path given");
    p.dataset = g.resolve(dataset);
    p.out = g.resolve(out);
    p.tsdf.validate();
    if (!(p.depth_min < p.depth_max)) throw std::runtime_error("depth_min must be below depth_max");
    return p;
}

Intrinsics synthetic_intrinsics() { return Intrinsics{}; }

void write_synthetic(const std::string &kind, const fs::path &dir, int frames) {
    const Intrinsics intr = synthetic_intrinsics();
    std::vector<Frame> rendered;
    std::vector<Eigen::Matrix4d> poses;
    if (kind == "plane") {
        poses = plane_trajectory(frames > 0 ? frames : 10);
        for (const auto &pose : poses) rendered.push_back(render_plane(1.0, intr, pose));
    } else if (kind == "sphere") {
        poses = orbit_trajectory(Eigen::Vector3d::Zero(), 1.5, frames > 0 ? frames : 24);
        for (const auto &pose : poses) rendered.push_back(render_sphere(Eigen::Vector3d::Zero(), 0.5, intr, pose));
    } else {
        throw std::runtime_error("synthetic scene must be plane or sphere, got '" + kind + "'");
    }
    fs::create_directories(dir / "depth");
    CameraFile camera{intr, 1000.0};
    write_intrinsics(dir / "intrinsics.json", camera);
    write_trajectory(dir / "trajectory.log", poses);
    for (size_t i = 0; i < rendered.size(); ++i)
        write_depth_pgm(depth_frame_path(dir, static_cast<int>(i)), rendered[i].depth, camera.depth_scale);
}

int cmd_bench(const Globals &g, int setup, const std::vector<std::string> &op_names,
              const std::vector<int64_t> &capacities, const std::vector<int64_t> &value_bytes,
              const std::vector<double> &uniqueness, int trials, uint64_t seed, const std::string &out,
              double max_bytes) {
    std::vector<bench::Op> ops;
    for (const auto &name : op_names) ops.push_back(bench::op_from_string(name));
    if (setup != 1 && setup != 2) throw std::runtime_error("setup must be 1 or 2");
    const std::vector<int64_t> caps = capacities.empty() ? bench::default_capacities() : capacities;
    std::vector<bench::WorkloadSpec> grid;
    if (setup == 1) {
        const auto sizes = value_bytes.empty() ? bench::setup1_value_bytes() : value_bytes;
        grid = uniqueness.empty() ? bench::setup1_grid(ops, caps, sizes) : bench::setup1_grid(ops, caps, sizes, uniqueness);
    } else {
        grid = uniqueness.empty() ? bench::setup2_grid(ops, caps) : bench::setup2_grid(ops, caps, uniqueness);
    }
    for (auto &spec : grid) {
        spec.threads = g.threads;
        spec.trials = trials;
        spec.seed = seed;
        spec.validate();
    }

    std::ofstream file;
    if (!out.empty()) {
        file.open(g.resolve(out));
        if (!file) throw std::runtime_error("cannot open " + g.resolve(out).string() + " for writing");
    }
    std::ostream &csv = out.empty() ? std::cout : file;
    bench::write_csv_header(csv);
    for (const auto &spec : grid) {
        const double footprint =
            static_cast<double>(spec.capacity) * static_cast<double>(2 * spec.value_bytes + 16 * spec.arity() + 64);
        if (footprint > max_bytes) {
            std::cerr << "skipping " << bench::to_string(spec.op) << " c=" << spec.capacity
                      << " value_bytes=" << spec.value_bytes << ": needs ~" << (static_cast<int64_t>(footprint) >> 20)
                      << " MiB, over --max-bytes\n";
            continue;
        }
        bench::write_csv_rows(csv, bench::run(spec));
    }
    return 0;
}

int cmd_voxelize(const Globals &g, const std::string &in, const std::string &out, double voxel_size,
                 const std::string &backend, bool ascii) {
    const PointCloud cloud = read_ply_points(g.resolve(in));
    const PointCloud down = voxel_downsample(cloud, voxel_size, g.threads, backend_from_string(backend));
    write_ply(g.resolve(out), down, ascii ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian);
    std::cout << cloud.size() << " points -> " << down.size() << " voxels\n";
    return 0;
}

int cmd_integrate(const Globals &g, const PipelineOptions &o) {
    const Pipeline p = resolve_pipeline(o, g);
    if (!o.synthetic.empty()) write_synthetic(o.synthetic, p.dataset, p.frames);

    const CameraFile camera = read_intrinsics(p.dataset / "intrinsics.json");
    const std::vector<Eigen::Matrix4d> poses = read_trajectory(p.dataset / "trajectory.log");
    const int frames = p.frames < 0 ? static_cast<int>(poses.size()) : std::min<int>(p.frames, static_cast<int>(poses.size()));
    VoxelBlockGrid grid(p.tsdf, g.threads);
    for (int i = 0; i < frames; ++i) {
        Frame frame;
        frame.intrinsics = camera.intrinsics;
        frame.pose = poses[static_cast<size_t>(i)];
        frame.depth = read_depth_pgm(depth_frame_path(p.dataset, i), camera.depth_scale);
        frame.depth_min = p.depth_min;
        frame.depth_max = p.depth_max;
        grid.integrate(frame);
    }
    grid.save(p.out);
    std::cout << "integrated " << frames << " frames into " << grid.block_count() << " blocks\n";
    return 0;
}

int cmd_raycast(const Globals &g, const std::string &snapshot, const std::string &pose_file,
                const std::string &intrinsics_file, const std::string &out, const std::string &mode, int max_steps,
                double depth_min, double depth_max) {
    VoxelBlockGrid grid = VoxelBlockGrid::load(g.resolve(snapshot), g.threads);
    const CameraFile camera = read_intrinsics(g.resolve(intrinsics_file));
    const Eigen::Matrix4d pose = read_pose(g.resolve(pose_file));
    RaycastOptions options;
    options.max_steps = max_steps;
    options.depth_min = depth_min;
    options.depth_max = depth_max;
    if (mode == "local") {
        options.mode = RaycastMode::Local;
        grid.build_frustum_local_map(camera.intrinsics, pose, depth_min, depth_max);
    } else if (mode != "global") {
        throw std::runtime_error("mode must be local or global, got '" + mode + "'");
    }
    const RaycastResult result = grid.raycast(camera.intrinsics, pose, options);
    write_depth_pgm(g.resolve(out), result.depth, camera.depth_scale);
    int64_t hits = 0;
    for (uint8_t m : result.mask.data) hits += m;
    std::cout << hits << " of " << result.mask.pixels() << " pixels hit the surface\n";
    return 0;
}

int cmd_mesh(const Globals &g, const std::string &snapshot, const std::string &out, bool points, bool ascii) {
    const VoxelBlockGrid grid = VoxelBlockGrid::load(g.resolve(snapshot), g.threads);
    const PlyFormat format = ascii ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian;
    if (points) {
        const PointCloud cloud = grid.extract_points();
        write_ply(g.resolve(out), cloud, format);
        std::cout << cloud.size() << " points\n";
    } else {
        const TriangleMesh mesh = grid.extract_mesh();
        write_ply(g.resolve(out), mesh, format);
        std::cout << mesh.vertices.size() << " vertices, " << mesh.triangles.size() << " triangles\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, char **argv) {
    CLI::App app{"Parallel spatial hashing and sparse TSDF reconstruction"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--root", g.root, "Directory that relative paths are resolved against");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);

    std::function<int()> action;

    auto *bench_cmd = app.add_subcommand("bench", "Time hash map batch operations over a workload grid");
    int setup = 1, trials = 10;
    uint64_t seed = 1;
    std::vector<std::string> ops{"insert", "find", "activate"};
    std::vector<int64_t> capacities, value_bytes;
    std::vector<double> uniqueness;
    std::string bench_out;
    double max_bytes = 1 << 30;
    bench_cmd->add_option("--setup", setup, "1: 3D keys, float blocks; 2: scalar keys, integer-delegate backend");
    bench_cmd->add_option("--ops", ops, "Operations: insert find activate erase")->delimiter(',');
    bench_cmd->add_option("--capacities", capacities, "Batch lengths (default 1e3..1e6)")->delimiter(',');
    bench_cmd->add_option("--value-bytes", value_bytes, "Value sizes in bytes (setup 1)")->delimiter(',');
    bench_cmd->add_option("--uniqueness", uniqueness, "Uniqueness ratios in (0, 1]")->delimiter(',');
    bench_cmd->add_option("--trials", trials, "Trials per workload");
    bench_cmd->add_option("--seed", seed, "Key generator seed");
    bench_cmd->add_option("--out", bench_out, "CSV output path (default stdout)");
    bench_cmd->add_option("--max-bytes", max_bytes, "Skip workloads whose buffers would exceed this many bytes");
    bench_cmd->callback([&] {
        action = [&] { return cmd_bench(g, setup, ops, capacities, value_bytes, uniqueness, trials, seed, bench_out, max_bytes); };
    });

    auto *vox = app.add_subcommand("voxelize", "Keep one point per voxel of a PLY point cloud");
    std::string vox_in, vox_out, vox_backend = "generic";
    double voxel_size = 0;
    bool vox_ascii = false;
    vox->add_option("input", vox_in, "Input PLY")->required();
    vox->add_option("output", vox_out, "Output PLY")->required();
    vox->add_option("--voxel-size", voxel_size, "Voxel edge in meters")->required();
    vox->add_option("--backend", vox_backend, "generic or integer_delegate");
    vox->add_flag("--ascii", vox_ascii, "Write ASCII PLY");
    vox->callback([&] { action = [&] { return cmd_voxelize(g, vox_in, vox_out, voxel_size, vox_backend, vox_ascii); }; });

    auto *synth = app.add_subcommand("synth", "Write a synthetic depth dataset");
    std::string synth_kind, synth_dir;
    int synth_frames = -1;
    synth->add_option("--synthetic", synth_kind, "plane or sphere")->required();
    synth->add_option("--dataset", synth_dir, "Output dataset directory")->required();
    synth->add_option("--frames", synth_frames, "Number of frames");
    synth->callback([&] {
        action = [&] {
            write_synthetic(synth_kind, g.resolve(synth_dir), synth_frames);
            return 0;
        };
    });

    auto *integ = app.add_subcommand("integrate", "Fuse a depth dataset into a TSDF volume snapshot");
    PipelineOptions po;
    integ->add_option("--config", po.config, "key = value pipeline config");
    integ->add_option("--dataset", po.dataset, "Dataset directory (depth/, trajectory.log, intrinsics.json)");
    integ->add_option("--out", po.out, "Output volume snapshot");
    integ->add_option("--synthetic", po.synthetic, "Write a plane or sphere dataset first");
    integ->add_option("--mode", po.mode, "fast or complete");
    integ->add_option("--voxel-size", po.voxel_size, "Voxel edge in meters");
    integ->add_option("--block-resolution", po.block_resolution, "Voxels per block edge (8 or 16)");
    integ->add_option("--trunc", po.trunc, "Truncation distance in meters");
    integ->add_option("--depth-min", po.depth_min, "Minimum accepted depth");
    integ->add_option("--depth-max", po.depth_max, "Maximum accepted depth");
    integ->add_option("--frames", po.frames, "Use at most this many frames");
    integ->add_option("--distance", po.distance, "projective or ray");
    integ->callback([&] { action = [&] { return cmd_integrate(g, po); }; });

    auto *ray = app.add_subcommand("raycast", "Render a depth image from a volume snapshot");
    std::string ray_snapshot, ray_pose, ray_intrinsics, ray_out, ray_mode = "global";
    int max_steps = 256;
    double ray_min = 0.2, ray_max = 3.0;
    ray->add_option("snapshot", ray_snapshot, "Volume snapshot")->required();
    ray->add_option("--pose", ray_pose, "Camera-to-world 4x4 pose file")->required();
    ray->add_option("--intrinsics", ray_intrinsics, "Intrinsics JSON")->required();
    ray->add_option("--out", ray_out, "Output 16-bit PGM")->required();
    ray->add_option("--mode", ray_mode, "global or local");
    ray->add_option("--max-steps", max_steps, "Marching step limit per ray");
    ray->add_option("--depth-min", ray_min, "Ray start depth");
    ray->add_option("--depth-max", ray_max, "Ray end depth");
    ray->callback([&] {
        action = [&] {
            return cmd_raycast(g, ray_snapshot, ray_pose, ray_intrinsics, ray_out, ray_mode, max_steps, ray_min, ray_max);
        };
    });

    auto *mesh = app.add_subcommand("mesh", "Extract a triangle mesh or surface points from a snapshot");
    std::string mesh_snapshot, mesh_out;
    bool mesh_points = false, mesh_ascii = false;
    mesh->add_option("snapshot", mesh_snapshot, "Volume snapshot")->required();
    mesh->add_option("output", mesh_out, "Output PLY")->required();
    mesh->add_flag("--points", mesh_points, "Write zero-crossing points instead of a mesh");
    mesh->add_flag("--ascii", mesh_ascii, "Write ASCII PLY");
    mesh->callback([&] { action = [&] { return cmd_mesh(g, mesh_snapshot, mesh_out, mesh_points, mesh_ascii); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }
    try {
        return action ? action() : 1;
    } catch (const std::exception &e) {
        std::cerr << "ash: error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace ash
