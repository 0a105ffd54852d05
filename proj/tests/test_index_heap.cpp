#include <doctest.h>

#include <algorithm>
#include <set>
#include <thread>
#include <vector>

#include "ash/index_heap.hpp"

using ash::BufIndex;
using ash::IndexHeap;

TEST_CASE("index heap hands out every index once") {
    IndexHeap heap(5);
    std::set<BufIndex> got;
    for (int i = 0; i < 5; ++i) got.insert(heap.allocate());
    CHECK(got == std::set<BufIndex>{0, 1, 2, 3, 4});
    CHECK(heap.allocate() == -1);
    CHECK(heap.top() == 5);
    CHECK(heap.free_count() == 0);
}

TEST_CASE("freed indices are reused") {
    IndexHeap heap(3);
    const BufIndex a = heap.allocate();
    heap.allocate();
    heap.free(a);
    CHECK(heap.top() == 1);
    REQUIRE(heap.free_indices().size() == 2);
    CHECK(std::count(heap.free_indices().begin(), heap.free_indices().end(), a) == 1);

    std::set<BufIndex> rest{heap.allocate(), heap.allocate()};
    CHECK(rest.count(a) == 1);
    CHECK(heap.allocate() == -1);
}

TEST_CASE("allocate_range is all or nothing") {
    IndexHeap heap(10);
    const int64_t first = heap.allocate_range(4);
    CHECK(first == 0);
    CHECK(heap.top() == 4);
    CHECK(heap.allocate_range(7) == -1);
    CHECK(heap.top() == 4);
    const int64_t second = heap.allocate_range(6);
    CHECK(second == 4);
    std::set<BufIndex> all;
    for (int64_t p = 0; p < 10; ++p) all.insert(heap.slot(p));
    CHECK(all.size() == 10);
}

TEST_CASE("reset restores the identity free list") {
    IndexHeap heap(4);
    heap.allocate();
    heap.allocate();
    heap.reset();
    CHECK(heap.top() == 0);
    for (BufIndex i = 0; i < 4; ++i) CHECK(heap.allocate() == i);
}

TEST_CASE("copies are independent") {
    IndexHeap heap(4);
    heap.allocate();
    IndexHeap copy = heap;
    copy.allocate();
    CHECK(heap.top() == 1);
    CHECK(copy.top() == 2);
}

TEST_CASE("concurrent allocation yields distinct indices") {
    constexpr int kThreads = 4;
    constexpr int kPer = 2000;
    IndexHeap heap(kThreads * kPer);
    std::vector<std::vector<BufIndex>> got(kThreads);
    {
        std::vector<std::jthread> threads;
        for (int t = 0; t < kThreads; ++t)
            threads.emplace_back([&, t] {
                for (int i = 0; i < kPer; ++i) got[static_cast<size_t>(t)].push_back(heap.allocate());
            });
    }
    std::set<BufIndex> all;
    for (const auto &g : got) all.insert(g.begin(), g.end());
    CHECK(all.size() == static_cast<size_t>(kThreads * kPer));
    CHECK(*all.begin() == 0);
    CHECK(*all.rbegin() == kThreads * kPer - 1);
}
