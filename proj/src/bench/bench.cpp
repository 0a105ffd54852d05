#include "ash/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include "ash/parallel.hpp"

namespace ash::bench {

std::string to_string(KeyKind kind) { return kind == KeyKind::Coord3 ? "coord3" : "scalar"; }

std::string to_string(Op op) {
    switch (op) {
        case Op::Insert: return "insert";
        case Op::Find: return "find";
        case Op::Activate: return "activate";
        case Op::Erase: return "erase";
    }
    return "?";
}

KeyKind key_kind_from_string(const std::string &name) {
    if (name == "coord3") return KeyKind::Coord3;
    if (name == "scalar") return KeyKind::Scalar;
    throw std::invalid_argument("unknown key kind '" + name + "'");
}

Op op_from_string(const std::string &name) {
    for (Op op : {Op::Insert, Op::Find, Op::Activate, Op::Erase})
        if (to_string(op) == name) return op;
    throw std::invalid_argument("unknown operation '" + name + "'");
}

void WorkloadSpec::validate() const {
    if (!(uniqueness > 0 && uniqueness <= 1)) throw std::invalid_argument("uniqueness must be in (0, 1]");
    if (trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (capacity < 1) throw std::invalid_argument("capacity must be positive");
    if (value_bytes < 0 || value_bytes % 4 != 0)
        throw std::invalid_argument("value bytes must be a non-negative multiple of 4");
}

namespace {

int64_t distinct_count(int64_t count, double uniqueness) {
    // The small slack keeps products like 0.1 * 1000 from rounding up.
    return std::clamp<int64_t>(static_cast<int64_t>(std::ceil(uniqueness * count - 1e-9)), 1, count);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

void check(bool ok, const WorkloadSpec &spec, const char *what) {
    if (!ok)
        throw std::runtime_error("benchmark check failed (" + std::string(what) + ") for " + to_string(spec.op) +
                                 " on " + ash::to_string(spec.backend));
}

}  // namespace

std::vector<int32_t> gen_keys(int64_t count, double uniqueness, KeyKind kind, uint64_t seed) {
    if (!(uniqueness > 0 && uniqueness <= 1)) throw std::invalid_argument("uniqueness must be in (0, 1]");
    if (count < 0) throw std::invalid_argument("key count must be non-negative");
    if (count == 0) return {};
    const int arity = kind == KeyKind::Coord3 ? 3 : 1;
    const int64_t distinct = distinct_count(count, uniqueness);

    std::mt19937_64 rng(seed);
    std::vector<int32_t> pool;
    pool.reserve(static_cast<size_t>(distinct * arity));
    std::unordered_set<uint64_t> seen;
    seen.reserve(static_cast<size_t>(distinct));
    std::uniform_int_distribution<int32_t> coord(-(1 << 20), (1 << 20) - 1);
    std::uniform_int_distribution<int32_t> scalar(std::numeric_limits<int32_t>::min(),
                                                  std::numeric_limits<int32_t>::max());
    while (static_cast<int64_t>(seen.size()) < distinct) {
        if (kind == KeyKind::Coord3) {
            const int32_t x = coord(rng), y = coord(rng), z = coord(rng);
            const uint64_t packed = (static_cast<uint64_t>(x + (1 << 20)) << 42) |
                                    (static_cast<uint64_t>(y + (1 << 20)) << 21) |
                                    static_cast<uint64_t>(z + (1 << 20));
            if (!seen.insert(packed).second) continue;
            pool.insert(pool.end(), {x, y, z});
        } else {
            const int32_t k = scalar(rng);
            if (!seen.insert(static_cast<uint32_t>(k)).second) continue;
            pool.push_back(k);
        }
    }

    std::vector<int64_t> order(static_cast<size_t>(count));
    for (int64_t j = 0; j < distinct; ++j) order[static_cast<size_t>(j)] = j;
    std::uniform_int_distribution<int64_t> pick(0, distinct - 1);
    for (int64_t j = distinct; j < count; ++j) order[static_cast<size_t>(j)] = pick(rng);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<int32_t> keys(static_cast<size_t>(count * arity));
    for (int64_t j = 0; j < count; ++j)
        std::copy_n(pool.begin() + order[static_cast<size_t>(j)] * arity, arity, keys.begin() + j * arity);
    return keys;
}

BenchRecord run(const WorkloadSpec &spec) {
    spec.validate();
    BenchRecord record;
    record.spec = spec;
    record.threads = resolve_workers(spec.threads);
    const int arity = spec.arity();
    const int64_t n = spec.capacity;
    const int64_t distinct = distinct_count(n, spec.uniqueness);
    record.unique_keys = distinct;

    ValueSchema schema;
    if (spec.value_bytes > 0) schema.push_back(ValueDesc{spec.value_bytes / 4, 4});
    const auto floats_per_entry = static_cast<size_t>(spec.value_bytes / 4);
    std::vector<float> values(static_cast<size_t>(n) * floats_per_entry);
    for (size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(i % 1000003);
    std::vector<ValueBatch> batches;
    if (!schema.empty()) batches.push_back(as_value_batch(values));

    const MapOptions options{record.threads, false, false};
    double construct_total = 0;
    for (int trial = 0; trial < spec.trials; ++trial) {
        const std::vector<int32_t> keys = gen_keys(n, spec.uniqueness, spec.key_kind, spec.seed + trial);
        auto start = std::chrono::steady_clock::now();
        HashMap map(n, KeySchema{arity}, schema, spec.backend, options);
        construct_total += elapsed_ms(start);
        if (spec.op == Op::Find || spec.op == Op::Erase) map.insert(keys, batches);

        BatchResult result;
        std::vector<uint8_t> erased;
        start = std::chrono::steady_clock::now();
        switch (spec.op) {
            case Op::Insert: result = map.insert(keys, batches); break;
            case Op::Activate: result = map.activate(keys); break;
            case Op::Find: result = map.find(keys); break;
            case Op::Erase: erased = map.erase(keys); break;
        }
        record.trial_ms.push_back(elapsed_ms(start));

        // Correctness checks, outside the timed region.
        if (spec.op == Op::Erase) {
            check(std::count(erased.begin(), erased.end(), 1) == distinct, spec, "erase mask count");
            check(map.size() == 0, spec, "size after erase");
            continue;
        }
        check(map.size() == distinct, spec, "size");
        if (spec.op == Op::Insert)
            check(result.count() == distinct, spec, "insert mask count");
        else
            check(result.count() == n, spec, "all keys resolved");

        std::vector<int64_t> owner;
        if (spec.op == Op::Insert) {
            owner.assign(static_cast<size_t>(map.capacity()), -1);
            for (int64_t j = 0; j < n; ++j)
                if (result.masks[static_cast<size_t>(j)]) owner[static_cast<size_t>(result.indices[static_cast<size_t>(j)])] = j;
        }
        std::mt19937_64 rng(spec.seed ^ 0x5bd1e995u);
        std::uniform_int_distribution<int64_t> pick(0, n - 1);
        for (int sample = 0; sample < 64; ++sample) {
            const int64_t j = pick(rng);
            const std::span<const int32_t> key(keys.data() + j * arity, static_cast<size_t>(arity));
            const BufIndex index = map.find_one(key);
            check(index >= 0, spec, "sampled find");
            check(std::equal(key.begin(), key.end(), map.key_at(index).begin()), spec, "sampled key");
            if (spec.op != Op::Insert) {
                check(result.indices[static_cast<size_t>(j)] == index, spec, "sampled index");
                continue;
            }
            if (schema.empty()) continue;
            const int64_t p = owner[static_cast<size_t>(index)];
            check(p >= 0, spec, "sampled owner");
            const auto stored = map.value_buffer(0).subspan(static_cast<size_t>(index) * floats_per_entry * 4,
                                                            floats_per_entry * 4);
            check(std::memcmp(stored.data(), values.data() + static_cast<size_t>(p) * floats_per_entry,
                              stored.size()) == 0,
                  spec, "sampled value");
        }
    }

    record.construct_ms = construct_total / spec.trials;
    record.min_ms = *std::min_element(record.trial_ms.begin(), record.trial_ms.end());
    record.max_ms = *std::max_element(record.trial_ms.begin(), record.trial_ms.end());
    double sum = 0;
    for (double ms : record.trial_ms) sum += ms;
    record.mean_ms = sum / spec.trials;
    return record;
}

std::vector<int64_t> setup1_value_bytes() {
    std::vector<int64_t> sizes;
    for (int j = 0; j <= 12; ++j) sizes.push_back(int64_t{4} << j);
    return sizes;
}

std::vector<int64_t> default_capacities() { return {1000, 10000, 100000, 1000000}; }

std::vector<WorkloadSpec> setup1_grid(const std::vector<Op> &ops, const std::vector<int64_t> &capacities,
                                      const std::vector<int64_t> &value_bytes,
                                      const std::vector<double> &uniqueness) {
    std::vector<WorkloadSpec> grid;
    for (Op op : ops)
        for (int64_t c : capacities)
            for (double rho : uniqueness)
                for (int64_t bytes : value_bytes) {
                    WorkloadSpec spec;
                    spec.backend = Backend::Generic;
                    spec.op = op;
                    spec.key_kind = KeyKind::Coord3;
                    spec.value_bytes = bytes;
                    spec.capacity = c;
                    spec.uniqueness = rho;
                    grid.push_back(spec);
                }
    return grid;
}

std::vector<WorkloadSpec> setup2_grid(const std::vector<Op> &ops, const std::vector<int64_t> &capacities,
                                      const std::vector<double> &uniqueness) {
    std::vector<WorkloadSpec> grid;
    for (Op op : ops)
        for (int64_t c : capacities)
            for (double rho : uniqueness) {
                WorkloadSpec spec;
                spec.backend = Backend::IntegerDelegate;
                spec.op = op;
                spec.key_kind = KeyKind::Scalar;
                spec.value_bytes = 4;
                spec.capacity = c;
                spec.uniqueness = rho;
                grid.push_back(spec);
            }
    return grid;
}

void write_csv_header(std::ostream &out) {
    out << "backend,op,key_kind,value_bytes,capacity,uniqueness,threads,trial,ms\n";
}

void write_csv_rows(std::ostream &out, const BenchRecord &record) {
    const WorkloadSpec &s = record.spec;
    for (size_t t = 0; t < record.trial_ms.size(); ++t) {
        out << ash::to_string(s.backend) << ',' << to_string(s.op) << ',' << to_string(s.key_kind) << ','
            << s.value_bytes << ',' << s.capacity << ',' << s.uniqueness << ',' << record.threads << ',' << t << ','
            << record.trial_ms[t] << '\n';
    }
}

}  // namespace ash::bench
