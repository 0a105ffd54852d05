#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ash/hashmap.hpp"

namespace ash::bench {

enum class KeyKind {
    /// 3D int coordinates drawn from [-2^20, 2^20)^3.
    Coord3,
    /// Single int32 over the full range.
    Scalar,
};

enum class Op { Insert, Find, Activate, Erase };

std::string to_string(KeyKind kind);
std::string to_string(Op op);
KeyKind key_kind_from_string(const std::string &name);
Op op_from_string(const std::string &name);

struct WorkloadSpec {
    Backend backend = Backend::Generic;
    Op op = Op::Insert;
    KeyKind key_kind = KeyKind::Coord3;
    /// Bytes of float payload per entry; 0 benchmarks a hash set.
    int64_t value_bytes = 4;
    /// Batch length, also used as the map capacity.
    int64_t capacity = 1000;
    double uniqueness = 1.0;
    int threads = 0;
    int trials = 10;
    uint64_t seed = 1;

    void validate() const;
    int arity() const { return key_kind == KeyKind::Coord3 ? 3 : 1; }
};

struct BenchRecord {
    WorkloadSpec spec;
    /// Resolved worker count.
    int threads = 1;
    std::vector<double> trial_ms;
    double mean_ms = 0;
    double min_ms = 0;
    double max_ms = 0;
    /// Mean map construction time, excluded from trial_ms.
    double construct_ms = 0;
    int64_t unique_keys = 0;
};

/// `count` keys with exactly ceil(uniqueness * count) distinct values;
/// the remaining positions repeat uniformly drawn distinct keys, and the
/// batch is shuffled. Deterministic in `seed`.
std::vector<int32_t> gen_keys(int64_t count, double uniqueness, KeyKind kind, uint64_t seed);

/// Times one batch operation on a fresh map per trial, after checking the
/// result (size and sampled lookups). Throws std::runtime_error if a check
/// fails.
BenchRecord run(const WorkloadSpec &spec);

/// Value sizes 4 * 2^j bytes for j = 0..12.
std::vector<int64_t> setup1_value_bytes();
std::vector<int64_t> default_capacities();

/// 3D keys to float blocks on the generic backend: every value size,
/// capacity and uniqueness for each op.
std::vector<WorkloadSpec> setup1_grid(const std::vector<Op> &ops, const std::vector<int64_t> &capacities,
                                      const std::vector<int64_t> &value_bytes,
                                      const std::vector<double> &uniqueness = {0.1, 0.99});
/// Scalar keys to one float on the integer-delegate backend.
std::vector<WorkloadSpec> setup2_grid(const std::vector<Op> &ops, const std::vector<int64_t> &capacities,
                                      const std::vector<double> &uniqueness = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
                                                                               0.8, 0.9, 0.99});

void write_csv_header(std::ostream &out);
/// One row per trial.
void write_csv_rows(std::ostream &out, const BenchRecord &record);

}  // namespace ash::bench
