#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ash/index_heap.hpp"

namespace ash {

enum class Backend {
    /// Bucket-locked chains of (key, buffer index) nodes, one-pass lazy insertion.
    Generic,
    /// Lock-free chains of buffer indices acting as delegate keys, three-pass insertion.
    IntegerDelegate,
};

std::string to_string(Backend backend);
Backend backend_from_string(const std::string &name);

struct KeySchema {
    int arity = 3;
};

/// One value buffer: `count` elements of `element_bytes` each per entry.
struct ValueDesc {
    int64_t count = 1;
    int64_t element_bytes = 4;

    int64_t bytes() const { return count * element_bytes; }
    bool operator==(const ValueDesc &) const = default;
};

/// Empty schema makes the map a hash set.
using ValueSchema = std::vector<ValueDesc>;

using KeyBatch = std::span<const int32_t>;
using ValueBatch = std::span<const std::byte>;

template <typename T>
ValueBatch as_value_batch(std::span<const T> values) {
    return std::as_bytes(values);
}
template <typename T>
ValueBatch as_value_batch(const std::vector<T> &values) {
    return std::as_bytes(std::span<const T>(values));
}

struct MapOptions {
    /// Worker threads per batch operation; 0 picks hardware concurrency.
    int workers = 0;
    /// Grow ×2 until a batch fits instead of throwing CapacityExceeded.
    bool auto_rehash = true;
    /// Checksum the key buffer around the hashing pass of three-pass
    /// insertion and throw if it changed. Debug aid.
    bool verify_key_buffer = false;
};

/// Parallel arrays returned by every batch operation. When masks[j] is 0
/// the matching index is unspecified and must not be read.
struct BatchResult {
    std::vector<BufIndex> indices;
    std::vector<uint8_t> masks;

    explicit BatchResult(size_t n = 0) : indices(n, -1), masks(n, 0) {}
    size_t size() const { return masks.size(); }
    int64_t count() const;
};

class CapacityExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a mutating batch overlaps another batch on the same map.
class ConcurrentAccessError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

namespace detail {
struct MapState;
}

/// Parallel spatial hash map with decoupled key/value buffers.
///
/// Keys are fixed-arity int32 tuples passed as flat batches of N*arity
/// integers. Entries live in a key buffer and one value buffer per schema
/// entry, all of `capacity` slots; the backend only resolves keys to buffer
/// indices, which are handed out by an index heap.
///
/// Access contract: find and the const buffer accessors may run
/// concurrently with each other. insert, activate, erase and rehash need
/// exclusive access; overlapping calls throw ConcurrentAccessError. Spans
/// returned by the buffer accessors are invalidated by rehash.
class HashMap {
public:
    HashMap(int64_t capacity, KeySchema key_schema, ValueSchema value_schema = {},
            Backend backend = Backend::Generic, MapOptions options = {});
    ~HashMap();

    HashMap(HashMap &&other) noexcept;
    HashMap &operator=(HashMap &&other) noexcept;
    HashMap(const HashMap &) = delete;
    HashMap &operator=(const HashMap &) = delete;

    /// Inserts keys that are not yet present. Existing values are never
    /// overwritten; exactly one position per new key reports mask 1.
    BatchResult insert(KeyBatch keys, std::span<const ValueBatch> values);
    BatchResult insert(KeyBatch keys, std::initializer_list<ValueBatch> values);

    /// Ensures every key is present and returns its buffer index, whether
    /// freshly inserted or already there. Value buffers are not written.
    BatchResult activate(KeyBatch keys);

    BatchResult find(KeyBatch keys) const;

    /// Removes present keys; a key repeated in the batch reports 1 once.
    std::vector<uint8_t> erase(KeyBatch keys);

    /// Buffer indices of all active entries, ascending.
    std::vector<BufIndex> active_indices() const;

    /// Moves every entry into buffers of `new_capacity`. Indices may change.
    void rehash(int64_t new_capacity);

    void clear();

    /// Single-key lookup for use inside caller-side parallel loops.
    BufIndex find_one(std::span<const int32_t> key) const;

    // Buffer access. Writing value buffers at active indices is the
    // in-place update path; the key buffer is read-only to callers.
    std::span<const int32_t> key_buffer() const;
    std::span<const int32_t> key_at(BufIndex index) const;
    std::span<std::byte> value_buffer(size_t schema_index);
    std::span<const std::byte> value_buffer(size_t schema_index) const;

    /// Typed view of a value buffer: capacity * (bytes per entry / sizeof(T)) elements.
    template <typename T>
    std::span<T> value_view(size_t schema_index) {
        auto raw = value_buffer(schema_index);
        check_view_type(schema_index, sizeof(T));
        return {reinterpret_cast<T *>(raw.data()), raw.size() / sizeof(T)};
    }
    template <typename T>
    std::span<const T> value_view(size_t schema_index) const {
        auto raw = value_buffer(schema_index);
        check_view_type(schema_index, sizeof(T));
        return {reinterpret_cast<const T *>(raw.data()), raw.size() / sizeof(T)};
    }

    int64_t size() const;
    int64_t capacity() const;
    int64_t bucket_count() const;
    int arity() const;
    Backend backend() const;
    const ValueSchema &value_schema() const;
    const MapOptions &options() const;
    void set_workers(int workers);

    /// Number of indices currently on the free list.
    int64_t free_count() const;
    const IndexHeap &heap() const;

private:
    BatchResult insert_impl(KeyBatch keys, std::span<const ValueBatch> values, bool activate);
    void reserve_for(KeyBatch keys);
    void rehash_locked(int64_t new_capacity);
    std::vector<BufIndex> active_indices_locked() const;
    void check_view_type(size_t schema_index, size_t type_size) const;

    std::unique_ptr<detail::MapState> state_;
    mutable std::atomic<int> access_{0};
};

/// Hash map with an empty value schema.
class HashSet {
public:
    HashSet(int64_t capacity, KeySchema key_schema, Backend backend = Backend::Generic,
            MapOptions options = {})
        : map_(capacity, key_schema, {}, backend, options) {}

    BatchResult insert(KeyBatch keys) { return map_.insert(keys, std::span<const ValueBatch>{}); }
    BatchResult find(KeyBatch keys) const { return map_.find(keys); }
    std::vector<uint8_t> erase(KeyBatch keys) { return map_.erase(keys); }
    bool contains(std::span<const int32_t> key) const { return map_.find_one(key) >= 0; }

    int64_t size() const { return map_.size(); }
    HashMap &map() { return map_; }
    const HashMap &map() const { return map_; }

private:
    HashMap map_;
};

}  // namespace ash
