#include "ash/hashmap.hpp"

#include <algorithm>
#include <cassert>
#include <cstring>
#include <thread>

#include "ash/hash.hpp"
#include "ash/parallel.hpp"

namespace ash {

std::string to_string(Backend backend) {
    return backend == Backend::Generic ? "generic" : "integer_delegate";
}

Backend backend_from_string(const std::string &name) {
    if (name == "generic") return Backend::Generic;
    if (name == "integer_delegate" || name == "delegate") return Backend::IntegerDelegate;
    throw std::invalid_argument("unknown backend '" + name + "'");
}

int64_t BatchResult::count() const {
    return std::count(masks.begin(), masks.end(), uint8_t{1});
}

namespace detail {
namespace {

using CopyFn = void (*)(std::byte *dst, const std::byte *src, size_t bytes);

template <size_t N>
void copy_fixed(std::byte *dst, const std::byte *src, size_t) {
    struct Block {
        std::byte data[N];
    };
    std::memcpy(dst, src, sizeof(Block));
}

void copy_generic(std::byte *dst, const std::byte *src, size_t bytes) {
    std::memcpy(dst, src, bytes);
}

// Values of 4/8/12/16 bytes take a fixed-width path, everything else a
// block copy.
CopyFn select_copy(int64_t bytes) {
    switch (bytes) {
        case 4: return &copy_fixed<4>;
        case 8: return &copy_fixed<8>;
        case 12: return &copy_fixed<12>;
        case 16: return &copy_fixed<16>;
        default: return &copy_generic;
    }
}

class SpinLocks {
public:
    explicit SpinLocks(int64_t n) : flags_(new std::atomic<uint8_t>[static_cast<size_t>(n)]) {
        for (int64_t i = 0; i < n; ++i) flags_[i].store(0, std::memory_order_relaxed);
    }
    void lock(int64_t i) {
        while (flags_[i].exchange(1, std::memory_order_acquire)) {
            while (flags_[i].load(std::memory_order_relaxed)) std::this_thread::yield();
        }
    }
    void unlock(int64_t i) { flags_[i].store(0, std::memory_order_release); }

private:
    std::unique_ptr<std::atomic<uint8_t>[]> flags_;
};

class BucketGuard {
public:
    BucketGuard(SpinLocks &locks, int64_t b) : locks_(locks), b_(b) { locks_.lock(b_); }
    ~BucketGuard() { locks_.unlock(b_); }
    BucketGuard(const BucketGuard &) = delete;
    BucketGuard &operator=(const BucketGuard &) = delete;

private:
    SpinLocks &locks_;
    int64_t b_;
};

std::unique_ptr<std::atomic<int32_t>[]> make_heads(int64_t n) {
    std::unique_ptr<std::atomic<int32_t>[]> heads(new std::atomic<int32_t>[static_cast<size_t>(n)]);
    for (int64_t i = 0; i < n; ++i) heads[i].store(-1, std::memory_order_relaxed);
    return heads;
}

bool keys_equal(const int32_t *a, const int32_t *b, int arity) {
    for (int d = 0; d < arity; ++d)
        if (a[d] != b[d]) return false;
    return true;
}

}  // namespace

struct InsertBatch {
    const int32_t *keys = nullptr;
    int64_t count = 0;
    /// One pointer per value schema, already offset to this batch; empty
    /// for activate.
    std::vector<const std::byte *> values;
    BufIndex *indices = nullptr;
    uint8_t *masks = nullptr;
};

struct MapState;

class ChainBackend {
public:
    virtual ~ChainBackend() = default;
    virtual int64_t bucket_count() const = 0;
    virtual void insert(MapState &state, const InsertBatch &batch) = 0;
    virtual BufIndex find(const MapState &state, const int32_t *key) const = 0;
    /// Unlinks the key and returns its buffer index, or -1.
    virtual BufIndex erase(MapState &state, const int32_t *key) = 0;
    virtual void clear() = 0;
};

struct MapState {
    int64_t capacity = 0;
    int arity = 0;
    ValueSchema schema;
    Backend backend = Backend::Generic;
    MapOptions options;

    std::vector<int32_t> keys;
    std::vector<std::vector<std::byte>> values;
    std::vector<CopyFn> copiers;
    IndexHeap heap;
    std::unique_ptr<ChainBackend> chains;

    int32_t *key_ptr(BufIndex i) { return keys.data() + static_cast<int64_t>(i) * arity; }
    const int32_t *key_ptr(BufIndex i) const {
        return keys.data() + static_cast<int64_t>(i) * arity;
    }

    void write_entry(BufIndex i, const int32_t *key, const InsertBatch &batch, int64_t j) {
        std::copy_n(key, arity, key_ptr(i));
        write_values(i, batch, j);
    }

    void write_values(BufIndex i, const InsertBatch &batch, int64_t j) {
        for (size_t s = 0; s < batch.values.size(); ++s) {
            const auto bytes = static_cast<size_t>(schema[s].bytes());
            copiers[s](values[s].data() + static_cast<size_t>(i) * bytes,
                       batch.values[s] + static_cast<size_t>(j) * bytes, bytes);
        }
    }
};

namespace {

// Chains of nodes that own a copy of the key plus the buffer index.
// Insertion publishes a node with a dummy index under the bucket lock and
// fills in the real index afterwards, so duplicates never touch the heap.
class GenericChains final : public ChainBackend {
public:
    GenericChains(int64_t capacity, int arity, int64_t buckets)
        : arity_(arity),
          buckets_(buckets),
          heads_(make_heads(buckets)),
          locks_(buckets),
          node_keys_(static_cast<size_t>(capacity * arity)),
          node_index_(static_cast<size_t>(capacity), -1),
          node_next_(static_cast<size_t>(capacity), -1),
          nodes_(capacity) {}

    int64_t bucket_count() const override { return buckets_; }

    void insert(MapState &state, const InsertBatch &batch) override {
        parallel_for(batch.count, state.options.workers, [&](int64_t begin, int64_t end) {
            for (int64_t j = begin; j < end; ++j) {
                const int32_t *key = batch.keys + j * arity_;
                const int32_t node = try_publish(key);
                if (node < 0) continue;
                const BufIndex i = state.heap.allocate();
                assert(i >= 0 && "reserve_for guarantees a free index per new key");
                node_index_[static_cast<size_t>(node)] = i;
                state.write_entry(i, key, batch, j);
                batch.indices[j] = i;
                batch.masks[j] = 1;
            }
        });
    }

    BufIndex find(const MapState &, const int32_t *key) const override {
        const int64_t b = bucket_of({key, static_cast<size_t>(arity_)}, buckets_);
        for (int32_t node = heads_[b].load(std::memory_order_acquire); node >= 0;
             node = node_next_[static_cast<size_t>(node)]) {
            if (keys_equal(node_key(node), key, arity_)) return node_index_[static_cast<size_t>(node)];
        }
        return -1;
    }

    BufIndex erase(MapState &, const int32_t *key) override {
        const int64_t b = bucket_of({key, static_cast<size_t>(arity_)}, buckets_);
        int32_t removed = -1;
        {
            BucketGuard guard(locks_, b);
            int32_t prev = -1;
            for (int32_t node = heads_[b].load(std::memory_order_relaxed); node >= 0;
                 prev = node, node = node_next_[static_cast<size_t>(node)]) {
                if (!keys_equal(node_key(node), key, arity_)) continue;
                const int32_t next = node_next_[static_cast<size_t>(node)];
                if (prev < 0)
                    heads_[b].store(next, std::memory_order_release);
                else
                    node_next_[static_cast<size_t>(prev)] = next;
                removed = node;
                break;
            }
        }
        if (removed < 0) return -1;
        const BufIndex i = node_index_[static_cast<size_t>(removed)];
        nodes_.free(removed);
        return i;
    }

    void clear() override {
        for (int64_t b = 0; b < buckets_; ++b) heads_[b].store(-1, std::memory_order_relaxed);
        nodes_.reset();
    }

private:
    const int32_t *node_key(int32_t node) const {
        return node_keys_.data() + static_cast<int64_t>(node) * arity_;
    }

    /// Returns the new node, or -1 when the key is already chained.
    int32_t try_publish(const int32_t *key) {
        const int64_t b = bucket_of({key, static_cast<size_t>(arity_)}, buckets_);
        BucketGuard guard(locks_, b);
        const int32_t head = heads_[b].load(std::memory_order_relaxed);
        for (int32_t node = head; node >= 0; node = node_next_[static_cast<size_t>(node)]) {
            if (keys_equal(node_key(node), key, arity_)) return -1;
        }
        const int32_t node = nodes_.allocate();
        std::copy_n(key, arity_, node_keys_.data() + static_cast<int64_t>(node) * arity_);
        node_index_[static_cast<size_t>(node)] = -1;
        node_next_[static_cast<size_t>(node)] = head;
        heads_[b].store(node, std::memory_order_release);
        return node;
    }

    int arity_;
    int64_t buckets_;
    std::unique_ptr<std::atomic<int32_t>[]> heads_;
    SpinLocks locks_;
    std::vector<int32_t> node_keys_;
    std::vector<BufIndex> node_index_;
    std::vector<int32_t> node_next_;
    IndexHeap nodes_;
};

// Chains of bare buffer indices; the key of a chain entry is read from the
// key buffer. Insertion copies all candidate keys first, then hashes with
// the key buffer read-only, then writes values and recycles the losers.
class DelegateChains final : public ChainBackend {
public:
    DelegateChains(int64_t capacity, int arity, int64_t buckets)
        : arity_(arity),
          buckets_(buckets),
          heads_(make_heads(buckets)),
          locks_(buckets),
          next_(static_cast<size_t>(capacity), -1) {}

    int64_t bucket_count() const override { return buckets_; }

    void insert(MapState &state, const InsertBatch &batch) override {
        const int workers = state.options.workers;
        const int64_t first = state.heap.allocate_range(batch.count);
        if (first < 0) throw CapacityExceeded("index heap exhausted during three-pass insertion");

        // Pass 1: every candidate key goes to the key buffer.
        parallel_for(batch.count, workers, [&](int64_t begin, int64_t end) {
            for (int64_t j = begin; j < end; ++j) {
                const BufIndex i = state.heap.slot(first + j);
                batch.indices[j] = i;
                std::copy_n(batch.keys + j * arity_, arity_, state.key_ptr(i));
            }
        });

        const uint64_t before = state.options.verify_key_buffer ? checksum(state, batch) : 0;

        // Pass 2: hash delegate indices; keys are read-only from here on.
        parallel_for(batch.count, workers, [&](int64_t begin, int64_t end) {
            for (int64_t j = begin; j < end; ++j) batch.masks[j] = publish(state, batch.indices[j]) ? 1 : 0;
        });

        if (state.options.verify_key_buffer && checksum(state, batch) != before)
            throw std::logic_error("key buffer modified during the hashing pass");

        // Pass 3: values for winners, indices of losers back to the heap.
        parallel_for(batch.count, workers, [&](int64_t begin, int64_t end) {
            for (int64_t j = begin; j < end; ++j) {
                if (batch.masks[j])
                    state.write_values(batch.indices[j], batch, j);
                else
                    state.heap.free(batch.indices[j]);
            }
        });
    }

    BufIndex find(const MapState &state, const int32_t *key) const override {
        const int64_t b = bucket_of({key, static_cast<size_t>(arity_)}, buckets_);
        for (int32_t i = heads_[b].load(std::memory_order_acquire); i >= 0;
             i = next_[static_cast<size_t>(i)]) {
            if (keys_equal(state.key_ptr(i), key, arity_)) return i;
        }
        return -1;
    }

    BufIndex erase(MapState &state, const int32_t *key) override {
        const int64_t b = bucket_of({key, static_cast<size_t>(arity_)}, buckets_);
        BucketGuard guard(locks_, b);
        int32_t prev = -1;
        for (int32_t i = heads_[b].load(std::memory_order_relaxed); i >= 0;
             prev = i, i = next_[static_cast<size_t>(i)]) {
            if (!keys_equal(state.key_ptr(i), key, arity_)) continue;
            const int32_t next = next_[static_cast<size_t>(i)];
            if (prev < 0)
                heads_[b].store(next, std::memory_order_release);
            else
                next_[static_cast<size_t>(prev)] = next;
            return i;
        }
        return -1;
    }

    void clear() override {
        for (int64_t b = 0; b < buckets_; ++b) heads_[b].store(-1, std::memory_order_relaxed);
    }

private:
    bool publish(MapState &state, BufIndex candidate) {
        const int32_t *key = state.key_ptr(candidate);
        const int64_t b = bucket_of({key, static_cast<size_t>(arity_)}, buckets_);
        int32_t head = heads_[b].load(std::memory_order_acquire);
        for (;;) {
            for (int32_t i = head; i >= 0; i = next_[static_cast<size_t>(i)]) {
                if (keys_equal(state.key_ptr(i), key, arity_)) return false;
            }
            next_[static_cast<size_t>(candidate)] = head;
            if (heads_[b].compare_exchange_weak(head, candidate, std::memory_order_acq_rel,
                                                std::memory_order_acquire))
                return true;
        }
    }

    uint64_t checksum(const MapState &state, const InsertBatch &batch) const {
        uint64_t sum = 0;
        for (int64_t j = 0; j < batch.count; ++j) {
            const int32_t *key = state.key_ptr(batch.indices[j]);
            for (int d = 0; d < arity_; ++d)
                sum = sum * 1099511628211ULL + static_cast<uint32_t>(key[d]);
        }
        return sum;
    }

    int arity_;
    int64_t buckets_;
    std::unique_ptr<std::atomic<int32_t>[]> heads_;
    SpinLocks locks_;
    std::vector<int32_t> next_;
};

std::unique_ptr<MapState> make_state(int64_t capacity, int arity, ValueSchema schema,
                                     Backend backend, MapOptions options) {
    auto state = std::make_unique<MapState>();
    state->capacity = capacity;
    state->arity = arity;
    state->schema = std::move(schema);
    state->backend = backend;
    state->options = options;
    state->keys.assign(static_cast<size_t>(capacity * arity), 0);
    for (const ValueDesc &desc : state->schema) {
        state->values.emplace_back(static_cast<size_t>(capacity * desc.bytes()));
        state->copiers.push_back(select_copy(desc.bytes()));
    }
    state->heap = IndexHeap(capacity);
    if (backend == Backend::Generic)
        state->chains = std::make_unique<GenericChains>(capacity, arity, capacity);
    else
        state->chains = std::make_unique<DelegateChains>(capacity, arity, 2 * capacity);
    return state;
}

}  // namespace
}  // namespace detail

namespace {

// Shared/exclusive access checker. Readers hold a positive count, a writer
// holds -1; any conflicting entry throws instead of blocking.
class AccessScope {
public:
    AccessScope(std::atomic<int> &access, bool exclusive) : access_(access), exclusive_(exclusive) {
        int current = access_.load(std::memory_order_acquire);
        if (exclusive_) {
            int expected = 0;
            if (!access_.compare_exchange_strong(expected, -1, std::memory_order_acq_rel))
                throw ConcurrentAccessError("mutating batch overlaps another batch on the same map");
            return;
        }
        do {
            if (current < 0)
                throw ConcurrentAccessError("read batch overlaps a mutating batch on the same map");
        } while (!access_.compare_exchange_weak(current, current + 1, std::memory_order_acq_rel));
    }
    ~AccessScope() {
        if (exclusive_)
            access_.store(0, std::memory_order_release);
        else
            access_.fetch_sub(1, std::memory_order_acq_rel);
    }
    AccessScope(const AccessScope &) = delete;
    AccessScope &operator=(const AccessScope &) = delete;

private:
    std::atomic<int> &access_;
    bool exclusive_;
};

void check_keys(KeyBatch keys, int arity) {
    if (keys.size() % static_cast<size_t>(arity) != 0)
        throw std::invalid_argument("key batch length " + std::to_string(keys.size()) +
                                    " is not a multiple of arity " + std::to_string(arity));
}

}  // namespace

HashMap::HashMap(int64_t capacity, KeySchema key_schema, ValueSchema value_schema,
                 Backend backend, MapOptions options) {
    if (capacity < 1) throw std::invalid_argument("hash map capacity must be positive");
    if (key_schema.arity < 1) throw std::invalid_argument("key arity must be positive");
    if (capacity > (int64_t{1} << 30)) throw std::invalid_argument("hash map capacity too large");
    for (const ValueDesc &desc : value_schema) {
        if (desc.count < 0 || desc.element_bytes < 0)
            throw std::invalid_argument("value descriptor sizes must be non-negative");
    }
    state_ = detail::make_state(capacity, key_schema.arity, std::move(value_schema), backend, options);
}

HashMap::~HashMap() = default;

HashMap::HashMap(HashMap &&other) noexcept : state_(std::move(other.state_)) {}

HashMap &HashMap::operator=(HashMap &&other) noexcept {
    state_ = std::move(other.state_);
    return *this;
}

BatchResult HashMap::insert(KeyBatch keys, std::span<const ValueBatch> values) {
    if (values.size() != state_->schema.size())
        throw std::invalid_argument("expected " + std::to_string(state_->schema.size()) +
                                    " value batches, got " + std::to_string(values.size()));
    return insert_impl(keys, values, false);
}

BatchResult HashMap::insert(KeyBatch keys, std::initializer_list<ValueBatch> values) {
    return insert(keys, std::span<const ValueBatch>(values.begin(), values.size()));
}

BatchResult HashMap::activate(KeyBatch keys) { return insert_impl(keys, {}, true); }

BatchResult HashMap::insert_impl(KeyBatch keys, std::span<const ValueBatch> values, bool activate) {
    AccessScope scope(access_, true);
    const int arity = state_->arity;
    check_keys(keys, arity);
    const auto n = static_cast<int64_t>(keys.size()) / arity;
    for (size_t s = 0; s < values.size(); ++s) {
        if (static_cast<int64_t>(values[s].size()) != n * state_->schema[s].bytes())
            throw std::invalid_argument("value batch " + std::to_string(s) + " holds " +
                                        std::to_string(values[s].size()) + " bytes, expected " +
                                        std::to_string(n * state_->schema[s].bytes()));
    }
    BatchResult result(static_cast<size_t>(n));
    if (n == 0) return result;

    reserve_for(keys);

    detail::InsertBatch batch;
    if (state_->backend == Backend::Generic) {
        batch.keys = keys.data();
        batch.count = n;
        for (const ValueBatch &v : values) batch.values.push_back(v.data());
        batch.indices = result.indices.data();
        batch.masks = result.masks.data();
        state_->chains->insert(*state_, batch);
    } else {
        // Three-pass insertion stages every candidate in the buffer, so a
        // batch larger than the free list goes through in slices.
        int64_t pos = 0;
        while (pos < n) {
            const int64_t free = state_->heap.free_count();
            if (free == 0) break;  // remaining keys are all present (checked by reserve_for)
            const int64_t len = std::min(free, n - pos);
            batch.keys = keys.data() + pos * arity;
            batch.count = len;
            batch.values.clear();
            for (size_t s = 0; s < values.size(); ++s)
                batch.values.push_back(values[s].data() + pos * state_->schema[s].bytes());
            batch.indices = result.indices.data() + pos;
            batch.masks = result.masks.data() + pos;
            state_->chains->insert(*state_, batch);
            pos += len;
        }
    }

    if (activate) {
        parallel_for_each(n, state_->options.workers, [&](int64_t j) {
            if (result.masks[j]) return;
            const BufIndex i = state_->chains->find(*state_, keys.data() + j * arity);
            if (i >= 0) {
                result.indices[j] = i;
                result.masks[j] = 1;
            }
        });
    }
    return result;
}

// Grows (or rejects) the map before a batch that could overflow it. The
// exact number of new keys is only computed when size + batch > capacity.
void HashMap::reserve_for(KeyBatch keys) {
    const int arity = state_->arity;
    const auto n = static_cast<int64_t>(keys.size()) / arity;
    const int64_t size = state_->heap.top();
    if (size + n <= state_->capacity) return;

    HashSet distinct(n, KeySchema{arity}, Backend::Generic,
                     MapOptions{state_->options.workers, false, false});
    const BatchResult first = distinct.insert(keys);
    std::atomic<int64_t> new_keys{0};
    parallel_for(n, state_->options.workers, [&](int64_t begin, int64_t end) {
        int64_t local = 0;
        for (int64_t j = begin; j < end; ++j) {
            if (first.masks[j] && state_->chains->find(*state_, keys.data() + j * arity) < 0) ++local;
        }
        new_keys.fetch_add(local, std::memory_order_relaxed);
    });

    const int64_t needed = size + new_keys.load();
    if (needed <= state_->capacity) return;
    if (!state_->options.auto_rehash)
        throw CapacityExceeded("batch needs " + std::to_string(needed) + " slots, capacity is " +
                               std::to_string(state_->capacity));
    int64_t grown = state_->capacity;
    while (grown < needed) grown *= 2;
    rehash_locked(grown);
}

BatchResult HashMap::find(KeyBatch keys) const {
    AccessScope scope(access_, false);
    const int arity = state_->arity;
    check_keys(keys, arity);
    const auto n = static_cast<int64_t>(keys.size()) / arity;
    BatchResult result(static_cast<size_t>(n));
    parallel_for(n, state_->options.workers, [&](int64_t begin, int64_t end) {
        for (int64_t j = begin; j < end; ++j) {
            const BufIndex i = state_->chains->find(*state_, keys.data() + j * arity);
            result.indices[j] = i;
            result.masks[j] = i >= 0 ? 1 : 0;
        }
    });
    return result;
}

BufIndex HashMap::find_one(std::span<const int32_t> key) const {
    if (key.size() != static_cast<size_t>(state_->arity))
        throw std::invalid_argument("key length does not match arity");
    return state_->chains->find(*state_, key.data());
}

std::vector<uint8_t> HashMap::erase(KeyBatch keys) {
    AccessScope scope(access_, true);
    const int arity = state_->arity;
    check_keys(keys, arity);
    const auto n = static_cast<int64_t>(keys.size()) / arity;
    std::vector<uint8_t> masks(static_cast<size_t>(n), 0);
    parallel_for(n, state_->options.workers, [&](int64_t begin, int64_t end) {
        for (int64_t j = begin; j < end; ++j) {
            const BufIndex i = state_->chains->erase(*state_, keys.data() + j * arity);
            if (i < 0) continue;
            state_->heap.free(i);
            masks[static_cast<size_t>(j)] = 1;
        }
    });
    return masks;
}

std::vector<BufIndex> HashMap::active_indices() const {
    AccessScope scope(access_, false);
    return active_indices_locked();
}

std::vector<BufIndex> HashMap::active_indices_locked() const {
    std::vector<uint8_t> is_free(static_cast<size_t>(state_->capacity), 0);
    for (BufIndex i : state_->heap.free_indices()) is_free[static_cast<size_t>(i)] = 1;
    std::vector<BufIndex> active;
    active.reserve(static_cast<size_t>(state_->heap.top()));
    for (int64_t i = 0; i < state_->capacity; ++i) {
        if (!is_free[static_cast<size_t>(i)]) active.push_back(static_cast<BufIndex>(i));
    }
    return active;
}

void HashMap::rehash(int64_t new_capacity) {
    AccessScope scope(access_, true);
    rehash_locked(new_capacity);
}

void HashMap::rehash_locked(int64_t new_capacity) {
    const int64_t size = state_->heap.top();
    if (new_capacity < 1 || new_capacity < size)
        throw std::invalid_argument("rehash capacity " + std::to_string(new_capacity) +
                                    " is below the current size " + std::to_string(size));
    const std::vector<BufIndex> active = active_indices_locked();

    const int arity = state_->arity;
    const auto count = static_cast<int64_t>(active.size());
    std::vector<int32_t> keys(static_cast<size_t>(count * arity));
    std::vector<std::vector<std::byte>> values(state_->schema.size());
    for (size_t s = 0; s < values.size(); ++s)
        values[s].resize(static_cast<size_t>(count * state_->schema[s].bytes()));

    parallel_for_each(count, state_->options.workers, [&](int64_t j) {
        const BufIndex i = active[static_cast<size_t>(j)];
        std::copy_n(state_->key_ptr(i), arity, keys.data() + j * arity);
        for (size_t s = 0; s < values.size(); ++s) {
            const auto bytes = static_cast<size_t>(state_->schema[s].bytes());
            std::memcpy(values[s].data() + static_cast<size_t>(j) * bytes,
                        state_->values[s].data() + static_cast<size_t>(i) * bytes, bytes);
        }
    });

    MapOptions options = state_->options;
    options.auto_rehash = false;
    HashMap grown(new_capacity, KeySchema{arity}, state_->schema, state_->backend, options);
    std::vector<ValueBatch> batches;
    for (const auto &v : values) batches.emplace_back(v);
    grown.insert(keys, batches);
    grown.state_->options = state_->options;
    state_ = std::move(grown.state_);
}

void HashMap::clear() {
    AccessScope scope(access_, true);
    state_->chains->clear();
    state_->heap.reset();
}

std::span<const int32_t> HashMap::key_buffer() const { return state_->keys; }

std::span<const int32_t> HashMap::key_at(BufIndex index) const {
    return {state_->key_ptr(index), static_cast<size_t>(state_->arity)};
}

std::span<std::byte> HashMap::value_buffer(size_t schema_index) {
    return state_->values.at(schema_index);
}

std::span<const std::byte> HashMap::value_buffer(size_t schema_index) const {
    return state_->values.at(schema_index);
}

void HashMap::check_view_type(size_t schema_index, size_t type_size) const {
    const ValueDesc &desc = state_->schema.at(schema_index);
    if (desc.bytes() % static_cast<int64_t>(type_size) != 0)
        throw std::invalid_argument("value entry of " + std::to_string(desc.bytes()) +
                                    " bytes is not a whole number of " + std::to_string(type_size) +
                                    "-byte elements");
}

int64_t HashMap::size() const { return state_->heap.top(); }
int64_t HashMap::capacity() const { return state_->capacity; }
int64_t HashMap::bucket_count() const { return state_->chains->bucket_count(); }
int HashMap::arity() const { return state_->arity; }
Backend HashMap::backend() const { return state_->backend; }
const ValueSchema &HashMap::value_schema() const { return state_->schema; }
const MapOptions &HashMap::options() const { return state_->options; }
void HashMap::set_workers(int workers) { state_->options.workers = workers; }
int64_t HashMap::free_count() const { return state_->heap.free_count(); }
const IndexHeap &HashMap::heap() const { return state_->heap; }

}  // namespace ash
