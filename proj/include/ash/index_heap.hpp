#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

namespace ash {

using BufIndex = int32_t;

/// Free-list of buffer indices. heap_[top_, capacity) holds the free
/// indices; allocation takes heap_[top_] and bumps top_, free writes the
/// index back below the top.
///
/// Allocation and free are each safe to call concurrently with themselves.
/// Mixing the two concurrently is not supported: a batch operation runs
/// an allocate phase and a free phase separated by a join.
class IndexHeap {
public:
    explicit IndexHeap(int64_t capacity = 0);

    IndexHeap(const IndexHeap &other);
    IndexHeap &operator=(const IndexHeap &other);

    /// Returns -1 when the heap is exhausted.
    BufIndex allocate();

    /// Reserves `count` indices at once. Returns the first heap slot; the
    /// indices are slot(first) .. slot(first + count - 1). Returns -1 and
    /// leaves the heap untouched when fewer than `count` are free.
    int64_t allocate_range(int64_t count);
    BufIndex slot(int64_t position) const { return heap_[static_cast<size_t>(position)]; }

    void free(BufIndex index);

    int64_t capacity() const { return static_cast<int64_t>(heap_.size()); }
    int64_t top() const { return top_.load(std::memory_order_acquire); }
    int64_t free_count() const { return capacity() - top(); }

    /// Indices currently on the free list.
    std::span<const BufIndex> free_indices() const;

    void reset();

private:
    std::vector<BufIndex> heap_;
    std::atomic<int64_t> top_{0};
};

}  // namespace ash
