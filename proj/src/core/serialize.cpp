#include "ash/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ash {
namespace {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

constexpr char kMagic[4] = {'A', 'S', 'H', 'L'};

template <typename T>
void put(std::ostream &out, T value) {
    out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T>
T get(std::istream &in) {
    T value{};
    if (!in.read(reinterpret_cast<char *>(&value), sizeof(T)))
        throw std::runtime_error("truncated map snapshot");
    return value;
}

}  // namespace

void save_map(const HashMap &map, std::ostream &out) {
    const std::vector<BufIndex> active = map.active_indices();
    const ValueSchema &schema = map.value_schema();

    out.write(kMagic, 4);
    put<uint32_t>(out, kSnapshotVersion);
    put<uint64_t>(out, static_cast<uint64_t>(map.capacity()));
    put<uint64_t>(out, static_cast<uint64_t>(map.bucket_count()));
    put<uint64_t>(out, active.size());
    put<uint32_t>(out, static_cast<uint32_t>(map.arity()));
    put<uint32_t>(out, static_cast<uint32_t>(schema.size()));
    for (const ValueDesc &desc : schema) {
        put<uint64_t>(out, static_cast<uint64_t>(desc.count));
        put<uint64_t>(out, static_cast<uint64_t>(desc.element_bytes));
    }

    for (BufIndex i : active) {
        const auto key = map.key_at(i);
        out.write(reinterpret_cast<const char *>(key.data()),
                  static_cast<std::streamsize>(key.size_bytes()));
        for (size_t s = 0; s < schema.size(); ++s) {
            const auto bytes = static_cast<size_t>(schema[s].bytes());
            const auto buffer = map.value_buffer(s);
            out.write(reinterpret_cast<const char *>(buffer.data() + static_cast<size_t>(i) * bytes),
                      static_cast<std::streamsize>(bytes));
        }
    }
    if (!out) throw std::runtime_error("failed writing map snapshot");
}

void save_map(const HashMap &map, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    save_map(map, out);
}

HashMap load_map(std::istream &in, Backend backend, MapOptions options) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a map snapshot (bad magic)");
    const auto version = get<uint32_t>(in);
    if (version != kSnapshotVersion)
        throw std::runtime_error("unsupported snapshot version " + std::to_string(version));
    const auto capacity = static_cast<int64_t>(get<uint64_t>(in));
    get<uint64_t>(in);  // bucket count is a property of the backend chosen at load
    const auto size = static_cast<int64_t>(get<uint64_t>(in));
    const auto arity = static_cast<int>(get<uint32_t>(in));
    const auto schema_count = get<uint32_t>(in);
    if (size > capacity || arity < 1 || schema_count > 1024)
        throw std::runtime_error("corrupt snapshot header");

    ValueSchema schema;
    for (uint32_t s = 0; s < schema_count; ++s) {
        ValueDesc desc;
        desc.count = static_cast<int64_t>(get<uint64_t>(in));
        desc.element_bytes = static_cast<int64_t>(get<uint64_t>(in));
        schema.push_back(desc);
    }

    std::vector<int32_t> keys(static_cast<size_t>(size * arity));
    std::vector<std::vector<std::byte>> values(schema.size());
    for (size_t s = 0; s < schema.size(); ++s) values[s].resize(static_cast<size_t>(size * schema[s].bytes()));
    for (int64_t row = 0; row < size; ++row) {
        in.read(reinterpret_cast<char *>(keys.data() + row * arity),
                static_cast<std::streamsize>(arity * sizeof(int32_t)));
        for (size_t s = 0; s < schema.size(); ++s) {
            const auto bytes = schema[s].bytes();
            in.read(reinterpret_cast<char *>(values[s].data() + row * bytes), static_cast<std::streamsize>(bytes));
        }
        if (!in) throw std::runtime_error("truncated map snapshot");
    }

    HashMap map(std::max<int64_t>(capacity, 1), KeySchema{arity}, schema, backend, options);
    std::vector<ValueBatch> batches(values.begin(), values.end());
    const BatchResult result = map.insert(keys, batches);
    if (result.count() != size) throw std::runtime_error("snapshot contains duplicate keys");
    return map;
}

HashMap load_map(const std::filesystem::path &path, Backend backend, MapOptions options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load_map(in, backend, options);
}

}  // namespace ash
