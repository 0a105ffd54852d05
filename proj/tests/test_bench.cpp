#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ash/bench.hpp"

using namespace ash;
using namespace ash::bench;

TEST_CASE("generated keys have the requested number of distinct values") {
    for (KeyKind kind : {KeyKind::Coord3, KeyKind::Scalar})
        for (double rho : {0.1, 0.5, 0.99, 1.0})
            for (int64_t n : {1, 7, 1000}) {
                const auto keys = gen_keys(n, rho, kind, 3);
                const int arity = kind == KeyKind::Coord3 ? 3 : 1;
                REQUIRE(static_cast<int64_t>(keys.size()) == n * arity);
                std::set<std::vector<int32_t>> distinct;
                for (int64_t j = 0; j < n; ++j)
                    distinct.emplace(keys.begin() + j * arity, keys.begin() + (j + 1) * arity);
                CHECK(static_cast<int64_t>(distinct.size()) == static_cast<int64_t>(std::ceil(rho * n - 1e-9)));
            }
    CHECK(gen_keys(100, 0.3, KeyKind::Coord3, 9) == gen_keys(100, 0.3, KeyKind::Coord3, 9));
    CHECK(gen_keys(100, 0.3, KeyKind::Coord3, 9) != gen_keys(100, 0.3, KeyKind::Coord3, 10));
}

TEST_CASE("workload validation") {
    WorkloadSpec spec;
    CHECK_NOTHROW(spec.validate());
    spec.uniqueness = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.uniqueness = 1.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = WorkloadSpec{};
    spec.capacity = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = WorkloadSpec{};
    spec.value_bytes = 6;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    CHECK_THROWS(op_from_string("upsert"));
    CHECK(op_from_string("activate") == Op::Activate);
    CHECK(key_kind_from_string(to_string(KeyKind::Scalar)) == KeyKind::Scalar);
}

TEST_CASE("every op runs and verifies on both backends") {
    for (Backend backend : {Backend::Generic, Backend::IntegerDelegate})
        for (Op op : {Op::Insert, Op::Find, Op::Activate, Op::Erase}) {
            WorkloadSpec spec;
            spec.backend = backend;
            spec.op = op;
            spec.capacity = 2000;
            spec.uniqueness = 0.3;
            spec.trials = 2;
            spec.threads = 2;
            spec.value_bytes = 16;
            const BenchRecord r = run(spec);
            CHECK(r.trial_ms.size() == 2);
            CHECK(r.unique_keys == 600);
            CHECK(r.min_ms <= r.mean_ms);
            CHECK(r.mean_ms <= r.max_ms);
            CHECK(r.threads == 2);
        }
    WorkloadSpec set;
    set.value_bytes = 0;
    set.trials = 1;
    CHECK_NOTHROW(run(set));
}

TEST_CASE("setup grids have the expected size") {
    CHECK(setup1_value_bytes().size() == 13);
    CHECK(setup1_value_bytes().front() == 4);
    CHECK(setup1_value_bytes().back() == 16384);
    CHECK(default_capacities().size() == 4);
    const auto g1 = setup1_grid({Op::Insert, Op::Find}, default_capacities(), setup1_value_bytes());
    CHECK(g1.size() == 13 * 4 * 2 * 2);
    const auto g2 = setup2_grid({Op::Activate}, {100, 1000});
    CHECK(g2.size() == 2 * 10);
    for (const auto &w : g2) {
        CHECK(w.backend == Backend::IntegerDelegate);
        CHECK(w.key_kind == KeyKind::Scalar);
    }
}

TEST_CASE("csv rows") {
    WorkloadSpec spec;
    spec.trials = 3;
    spec.capacity = 100;
    const BenchRecord r = run(spec);
    std::ostringstream out;
    write_csv_header(out);
    write_csv_rows(out, r);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "backend,op,key_kind,value_bytes,capacity,uniqueness,threads,trial,ms");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(line.rfind("generic,insert,coord3,4,100,", 0) == 0);
    }
    CHECK(rows == 3);
}
