#include <array>
#include <cassert>
#include <optional>

#include "ash/geometry.hpp"
#include "ash/parallel.hpp"
#include "ash/tsdf.hpp"

namespace ash {
namespace {

// Cube corner c sits at (c & 1, (c >> 1) & 1, (c >> 2) & 1) relative to the
// cube's minimum voxel. Edge e runs from kEdgeCorners[e][0] along axis
// kEdgeAxis[e], so the lower corner owns it.
constexpr std::array<std::array<int, 2>, 12> kEdgeCorners = {{
    {0, 1}, {2, 3}, {4, 5}, {6, 7},  // x
    {0, 2}, {1, 3}, {4, 6}, {5, 7},  // y
    {0, 4}, {1, 5}, {2, 6}, {3, 7},  // z
}};
constexpr std::array<int, 12> kEdgeAxis = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};

// Faces as corner cycles, counter-clockwise seen from outside the cube.
constexpr std::array<std::array<int, 4>, 6> kFaces = {{
    {0, 4, 6, 2},  // x = 0
    {1, 3, 7, 5},  // x = 1
    {0, 1, 5, 4},  // y = 0
    {2, 6, 7, 3},  // y = 1
    {0, 2, 3, 1},  // z = 0
    {4, 5, 7, 6},  // z = 1
}};

struct CaseTable {
    // Per configuration: triangle edge triples, terminated by -1.
    std::array<std::array<int8_t, 31>, 256> triangles;
};

int edge_between(int a, int b) {
    for (int e = 0; e < 12; ++e) {
        const auto &c = kEdgeCorners[static_cast<size_t>(e)];
        if ((c[0] == a && c[1] == b) || (c[0] == b && c[1] == a)) return e;
    }
    return -1;
}

bool on_common_face(int e1, int e2) {
    for (const auto &face : kFaces) {
        int hits = 0;
        for (int k = 0; k < 4; ++k) {
            const int e = edge_between(face[static_cast<size_t>(k)], face[static_cast<size_t>((k + 1) % 4)]);
            hits += e == e1 || e == e2;
        }
        if (hits == 2) return true;
    }
    return false;
}

// Triangulates the contour loop[first..last] without diagonals that lie in
// a cube face. A loop that crosses one face twice would otherwise get a
// triangle flat in that face, duplicated by the neighbor cube.
std::optional<std::vector<std::array<int, 3>>> triangulate(const std::vector<int> &loop, size_t first,
                                                           size_t last) {
    std::vector<std::array<int, 3>> out;
    if (last - first < 2) return out;
    for (size_t k = first + 1; k < last; ++k) {
        if (k > first + 1 && on_common_face(loop[first], loop[k])) continue;
        if (k + 1 < last && on_common_face(loop[k], loop[last])) continue;
        auto left = triangulate(loop, first, k);
        if (!left) continue;
        auto right = triangulate(loop, k, last);
        if (!right) continue;
        out = std::move(*left);
        out.push_back({loop[first], loop[k], loop[last]});
        out.insert(out.end(), right->begin(), right->end());
        return out;
    }
    return std::nullopt;
}

// Builds the case table by walking the iso-contour across the cube faces.
// On every face, an edge where the contour enters the inside region is
// linked to the next edge where it leaves; ambiguous faces therefore always
// separate their inside corners, which neighboring cubes agree on. Each
// closed contour is triangulated with normals pointing from inside
// (negative) to outside.
CaseTable build_case_table() {
    CaseTable table{};
    for (int config = 0; config < 256; ++config) {
        auto inside = [&](int corner) { return (config >> corner) & 1; };
        std::array<int, 12> next;
        next.fill(-1);
        for (const auto &face : kFaces) {
            std::array<int, 4> crossing;
            crossing.fill(-1);
            for (int k = 0; k < 4; ++k) {
                const int a = face[static_cast<size_t>(k)], b = face[static_cast<size_t>((k + 1) % 4)];
                if (inside(a) != inside(b)) crossing[static_cast<size_t>(k)] = edge_between(a, b);
            }
            for (int k = 0; k < 4; ++k) {
                const int a = face[static_cast<size_t>(k)];
                if (crossing[static_cast<size_t>(k)] < 0 || inside(a)) continue;
                // Entering at side k; leave at the next crossing side.
                for (int m = 1; m < 4; ++m) {
                    const int exit = crossing[static_cast<size_t>((k + m) % 4)];
                    if (exit >= 0) {
                        next[static_cast<size_t>(crossing[static_cast<size_t>(k)])] = exit;
                        break;
                    }
                }
            }
        }
        std::array<bool, 12> seen{};
        size_t out = 0;
        for (int start = 0; start < 12; ++start) {
            if (next[static_cast<size_t>(start)] < 0 || seen[static_cast<size_t>(start)]) continue;
            std::vector<int> loop;
            for (int e = start; !seen[static_cast<size_t>(e)]; e = next[static_cast<size_t>(e)]) {
                seen[static_cast<size_t>(e)] = true;
                loop.push_back(e);
            }
            const auto tris = triangulate(loop, 0, loop.size() - 1);
            assert(tris && "every contour loop has a triangulation off the cube faces");
            for (const auto &t : *tris)
                for (int e : t) table.triangles[static_cast<size_t>(config)][out++] = static_cast<int8_t>(e);
        }
        table.triangles[static_cast<size_t>(config)][out] = -1;
    }
    return table;
}

const CaseTable &case_table() {
    static const CaseTable table = build_case_table();
    return table;
}

struct EdgeVertex {
    Eigen::Vector3d position;
    Eigen::Vector3d normal;
};

// Shared state for one extraction pass over all active blocks.
class Extractor {
public:
    explicit Extractor(const VoxelBlockGrid &grid)
        : grid_(grid), l_(grid.config().block_resolution), s_(grid.config().voxel_size) {
        const HashMap &map = grid.global_map();
        blocks_ = map.active_indices();
        slot_of_.assign(static_cast<size_t>(map.capacity()), -1);
        coords_.resize(blocks_.size());
        for (size_t b = 0; b < blocks_.size(); ++b) {
            slot_of_[static_cast<size_t>(blocks_[b])] = static_cast<int32_t>(b);
            const auto key = map.key_at(blocks_[b]);
            coords_[b] = Eigen::Vector3i(key[0], key[1], key[2]);
        }
        const BatchResult table = radius_neighbors(map, coords_, 1);
        neighbors_.resize(table.size());
        for (size_t i = 0; i < table.size(); ++i)
            neighbors_[i] = table.masks[i] ? slot_of_[static_cast<size_t>(table.indices[i])] : -1;
    }

    size_t block_count() const { return blocks_.size(); }
    int64_t voxels_per_block() const { return int64_t{l_} * l_ * l_; }

    // Resolves voxel v (local to block slot b, each component in [-l, 2l))
    // to its block slot and local offset. Returns false when absent.
    bool locate(size_t b, Eigen::Vector3i v, int32_t &slot, int64_t &offset) const {
        int o = 0, mul = 1;
        for (int k = 0; k < 3; ++k) {
            const int shift = v[k] < 0 ? -1 : (v[k] >= l_ ? 1 : 0);
            v[k] -= shift * l_;
            o += (shift + 1) * mul;
            mul *= 3;
        }
        slot = neighbors_[b * 27 + static_cast<size_t>(o)];
        if (slot < 0) return false;
        offset = v.x() + l_ * (v.y() + int64_t{l_} * v.z());
        return true;
    }

    // (tsdf, weight) of a voxel with positive weight, else null.
    const float *observed(size_t b, const Eigen::Vector3i &v) const {
        int32_t slot = -1;
        int64_t offset = 0;
        if (!locate(b, v, slot, offset)) return nullptr;
        const float *p = grid_.block_data(blocks_[static_cast<size_t>(slot)]).data() + 2 * offset;
        return p[1] > 0 ? p : nullptr;
    }

    Eigen::Vector3d center(size_t b, const Eigen::Vector3i &v) const {
        return ((coords_[b] * l_ + v).cast<double>() + Eigen::Vector3d::Constant(0.5)) * s_;
    }

    Eigen::Vector3d gradient(size_t b, const Eigen::Vector3i &v) const {
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        const float *c = observed(b, v);
        for (int k = 0; k < 3; ++k) {
            const Eigen::Vector3i e = Eigen::Vector3i::Unit(k);
            const float *p = observed(b, v + e);
            const float *m = observed(b, v - e);
            if (p && m)
                g[k] = (p[0] - m[0]) / (2 * s_);
            else if (p && c)
                g[k] = (p[0] - c[0]) / s_;
            else if (m && c)
                g[k] = (c[0] - m[0]) / s_;
        }
        return g;
    }

    // Collects the crossing vertices of the three edges owned by every voxel.
    // local_ids[b] holds, per voxel and axis, the vertex number within block b.
    void collect_vertices(std::vector<std::vector<EdgeVertex>> &vertices,
                          std::vector<std::vector<int32_t>> &local_ids, int workers) const {
        vertices.assign(blocks_.size(), {});
        local_ids.assign(blocks_.size(), {});
        parallel_for_each(static_cast<int64_t>(blocks_.size()), workers, [&](int64_t bi) {
            const auto b = static_cast<size_t>(bi);
            auto &ids = local_ids[b];
            ids.assign(static_cast<size_t>(voxels_per_block() * 3), -1);
            for (int z = 0; z < l_; ++z)
                for (int y = 0; y < l_; ++y)
                    for (int x = 0; x < l_; ++x) {
                        const Eigen::Vector3i v(x, y, z);
                        const float *p = observed(b, v);
                        if (!p) continue;
                        for (int axis = 0; axis < 3; ++axis) {
                            const Eigen::Vector3i n = v + Eigen::Vector3i::Unit(axis);
                            const float *q = observed(b, n);
                            if (!q || (p[0] < 0) == (q[0] < 0)) continue;
                            const double t = p[0] / (static_cast<double>(p[0]) - q[0]);
                            EdgeVertex vertex;
                            vertex.position = center(b, v) + t * (center(b, n) - center(b, v));
                            const Eigen::Vector3d g = (1 - t) * gradient(b, v) + t * gradient(b, n);
                            vertex.normal = g.norm() > 0 ? g.normalized() : g;
                            const auto offset = static_cast<size_t>(x + l_ * (y + l_ * z));
                            ids[offset * 3 + static_cast<size_t>(axis)] =
                                static_cast<int32_t>(vertices[b].size());
                            vertices[b].push_back(vertex);
                        }
                    }
        });
    }

    void collect_triangles(const std::vector<std::vector<int32_t>> &local_ids,
                           const std::vector<int64_t> &first_vertex,
                           std::vector<std::vector<Eigen::Vector3i>> &triangles, int workers) const {
        const CaseTable &table = case_table();
        triangles.assign(blocks_.size(), {});
        parallel_for_each(static_cast<int64_t>(blocks_.size()), workers, [&](int64_t bi) {
            const auto b = static_cast<size_t>(bi);
            for (int z = 0; z < l_; ++z)
                for (int y = 0; y < l_; ++y)
                    for (int x = 0; x < l_; ++x) {
                        const Eigen::Vector3i v(x, y, z);
                        int config = 0;
                        bool valid = true;
                        for (int c = 0; c < 8 && valid; ++c) {
                            const float *p = observed(b, v + Eigen::Vector3i(c & 1, (c >> 1) & 1, (c >> 2) & 1));
                            if (!p) valid = false;
                            else if (p[0] < 0) config |= 1 << c;
                        }
                        if (!valid || config == 0 || config == 255) continue;
                        const auto &tris = table.triangles[static_cast<size_t>(config)];
                        for (size_t i = 0; tris[i] >= 0; i += 3) {
                            Eigen::Vector3i tri;
                            for (size_t k = 0; k < 3; ++k) {
                                const auto e = static_cast<size_t>(tris[i + k]);
                                const int c = kEdgeCorners[e][0];
                                const Eigen::Vector3i owner = v + Eigen::Vector3i(c & 1, (c >> 1) & 1, (c >> 2) & 1);
                                int32_t slot = -1;
                                int64_t offset = 0;
                                const bool found = locate(b, owner, slot, offset);
                                assert(found);
                                (void)found;
                                const int32_t id =
                                    local_ids[static_cast<size_t>(slot)][static_cast<size_t>(offset * 3 + kEdgeAxis[e])];
                                assert(id >= 0);
                                tri[static_cast<int>(k)] =
                                    static_cast<int32_t>(first_vertex[static_cast<size_t>(slot)] + id);
                            }
                            triangles[b].push_back(tri);
                        }
                    }
        });
    }

private:
    const VoxelBlockGrid &grid_;
    int l_;
    double s_;
    std::vector<BufIndex> blocks_;
    std::vector<int32_t> slot_of_;
    std::vector<Eigen::Vector3i> coords_;
    std::vector<int32_t> neighbors_;
};

std::vector<int64_t> prefix_sizes(const std::vector<std::vector<EdgeVertex>> &vertices) {
    std::vector<int64_t> first(vertices.size() + 1, 0);
    for (size_t b = 0; b < vertices.size(); ++b)
        first[b + 1] = first[b] + static_cast<int64_t>(vertices[b].size());
    return first;
}

}  // namespace

TriangleMesh VoxelBlockGrid::extract_mesh() const {
    TriangleMesh mesh;
    const Extractor extractor(*this);
    if (extractor.block_count() == 0) return mesh;

    std::vector<std::vector<EdgeVertex>> vertices;
    std::vector<std::vector<int32_t>> local_ids;
    extractor.collect_vertices(vertices, local_ids, workers_);
    const std::vector<int64_t> first = prefix_sizes(vertices);
    std::vector<std::vector<Eigen::Vector3i>> triangles;
    extractor.collect_triangles(local_ids, first, triangles, workers_);

    // Crossing vertices whose cubes all have an unobserved corner are not
    // referenced by any triangle; drop them.
    std::vector<int32_t> remap(static_cast<size_t>(first.back()), -1);
    for (const auto &block : triangles)
        for (const Eigen::Vector3i &t : block)
            for (int k = 0; k < 3; ++k) remap[static_cast<size_t>(t[k])] = 0;
    int32_t used = 0;
    for (int32_t &r : remap)
        if (r == 0) r = used++;
    mesh.vertices.resize(static_cast<size_t>(used));
    mesh.normals.resize(static_cast<size_t>(used));
    for (size_t b = 0; b < vertices.size(); ++b)
        for (size_t i = 0; i < vertices[b].size(); ++i) {
            const int32_t r = remap[static_cast<size_t>(first[b]) + i];
            if (r < 0) continue;
            mesh.vertices[static_cast<size_t>(r)] = vertices[b][i].position;
            mesh.normals[static_cast<size_t>(r)] = vertices[b][i].normal;
        }
    for (const auto &block : triangles)
        for (const Eigen::Vector3i &t : block)
            mesh.triangles.emplace_back(remap[static_cast<size_t>(t[0])], remap[static_cast<size_t>(t[1])],
                                        remap[static_cast<size_t>(t[2])]);
    return mesh;
}

PointCloud VoxelBlockGrid::extract_points() const {
    PointCloud cloud;
    const Extractor extractor(*this);
    if (extractor.block_count() == 0) return cloud;
    std::vector<std::vector<EdgeVertex>> vertices;
    std::vector<std::vector<int32_t>> local_ids;
    extractor.collect_vertices(vertices, local_ids, workers_);
    for (const auto &block : vertices)
        for (const EdgeVertex &v : block) {
            cloud.positions.push_back(v.position);
            cloud.normals.push_back(v.normal);
        }
    return cloud;
}

}  // namespace ash
