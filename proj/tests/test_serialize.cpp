#include <doctest.h>

#include <random>
#include <sstream>

#include "ash/serialize.hpp"
#include "oracles.hpp"

using namespace ash;

TEST_CASE("snapshot round trip keeps content and capacity") {
    std::mt19937_64 rng(21);
    for (Backend backend : {Backend::Generic, Backend::IntegerDelegate}) {
        HashMap map(300, KeySchema{3}, {ValueDesc{2, 4}, ValueDesc{1, 2}}, backend);
        const auto keys = oracle::random_keys(rng, 250, 3, 30);
        const auto v0 = oracle::random_bytes(rng, 250 * 8);
        const auto v1 = oracle::random_bytes(rng, 250 * 2);
        map.insert(keys, {ValueBatch(v0), ValueBatch(v1)});
        map.erase(std::span<const int32_t>(keys).first(30));

        std::stringstream buf;
        save_map(map, buf);
        const HashMap back = load_map(buf, Backend::IntegerDelegate);
        CHECK(back.capacity() == map.capacity());
        CHECK(back.size() == map.size());
        CHECK(back.value_schema() == map.value_schema());
        CHECK(oracle::content_of(back) == oracle::content_of(map));
    }
}

TEST_CASE("snapshot of an empty set") {
    HashMap set(4, KeySchema{2});
    std::stringstream buf;
    save_map(set, buf);
    const HashMap back = load_map(buf);
    CHECK(back.size() == 0);
    CHECK(back.arity() == 2);
    CHECK(back.value_schema().empty());
}

TEST_CASE("snapshot bytes are deterministic") {
    auto build = [](int workers) {
        HashMap map(100, KeySchema{3}, {ValueDesc{1, 4}}, Backend::Generic, MapOptions{workers});
        std::vector<int32_t> keys;
        std::vector<int32_t> values;
        for (int i = 0; i < 100; ++i) {
            keys.insert(keys.end(), {i, i % 7, -i});
            values.push_back(i * 3);
        }
        map.insert(keys, {as_value_batch(values)});
        std::stringstream buf;
        save_map(map, buf);
        return buf.str();
    };
    CHECK(build(1) == build(1));
}

TEST_CASE("malformed snapshots are rejected") {
    HashMap map(8, KeySchema{3}, {ValueDesc{1, 4}});
    const std::vector<int32_t> keys{1, 2, 3};
    const std::vector<float> values{1};
    map.insert(keys, {as_value_batch(values)});
    std::stringstream buf;
    save_map(map, buf);
    const std::string good = buf.str();

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    std::istringstream a(bad_magic);
    CHECK_THROWS_AS(load_map(a), std::runtime_error);

    std::istringstream b(good.substr(0, good.size() - 2));
    CHECK_THROWS_AS(load_map(b), std::runtime_error);

    std::string bad_version = good;
    bad_version[4] = 9;
    std::istringstream c(bad_version);
    CHECK_THROWS_AS(load_map(c), std::runtime_error);

    CHECK_THROWS(load_map(std::filesystem::path("/nonexistent/map.ash")));
}
