#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ash {

/// Number of workers used when a caller passes 0.
inline int default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline int resolve_workers(int workers) {
    return workers <= 0 ? default_workers() : workers;
}

/// Splits [0, n) into contiguous chunks, one per worker, and runs
/// fn(begin, end) on each. The calling thread takes the first chunk.
/// Exceptions thrown by any chunk are rethrown after all workers join.
template <typename Fn>
void parallel_for(int64_t n, int workers, Fn &&fn) {
    if (n <= 0) return;
    workers = resolve_workers(workers);
    const int64_t chunks = std::min<int64_t>(workers, n);
    if (chunks <= 1) {
        fn(int64_t{0}, n);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&](int64_t c) {
        const int64_t begin = n * c / chunks;
        const int64_t end = n * (c + 1) / chunks;
        try {
            fn(begin, end);
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };

    std::vector<std::jthread> threads;
    threads.reserve(static_cast<size_t>(chunks - 1));
    for (int64_t c = 1; c < chunks; ++c) threads.emplace_back(run, c);
    run(0);
    threads.clear();
    if (error) std::rethrow_exception(error);
}

/// Element-wise convenience wrapper over parallel_for.
template <typename Fn>
void parallel_for_each(int64_t n, int workers, Fn &&fn) {
    parallel_for(n, workers, [&](int64_t begin, int64_t end) {
        for (int64_t i = begin; i < end; ++i) fn(i);
    });
}

}  // namespace ash
