#include "ash/index_heap.hpp"

#include <numeric>
#include <stdexcept>

namespace ash {

IndexHeap::IndexHeap(int64_t capacity) : heap_(static_cast<size_t>(capacity)) {
    if (capacity < 0) throw std::invalid_argument("index heap capacity must be non-negative");
    reset();
}

IndexHeap::IndexHeap(const IndexHeap &other) : heap_(other.heap_), top_(other.top()) {}

IndexHeap &IndexHeap::operator=(const IndexHeap &other) {
    heap_ = other.heap_;
    top_.store(other.top(), std::memory_order_release);
    return *this;
}

void IndexHeap::reset() {
    std::iota(heap_.begin(), heap_.end(), BufIndex{0});
    top_.store(0, std::memory_order_release);
}

BufIndex IndexHeap::allocate() {
    const int64_t t = top_.fetch_add(1, std::memory_order_acq_rel);
    if (t >= capacity()) {
        top_.fetch_sub(1, std::memory_order_acq_rel);
        return -1;
    }
    return heap_[static_cast<size_t>(t)];
}

int64_t IndexHeap::allocate_range(int64_t count) {
    int64_t t = top_.load(std::memory_order_acquire);
    do {
        if (t + count > capacity()) return -1;
    } while (!top_.compare_exchange_weak(t, t + count, std::memory_order_acq_rel));
    return t;
}

void IndexHeap::free(BufIndex index) {
    const int64_t t = top_.fetch_sub(1, std::memory_order_acq_rel) - 1;
    heap_[static_cast<size_t>(t)] = index;
}

std::span<const BufIndex> IndexHeap::free_indices() const {
    const auto t = static_cast<size_t>(top());
    return std::span<const BufIndex>(heap_).subspan(t);
}

}  // namespace ash
