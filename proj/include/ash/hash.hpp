#pragma once

#include <cstdint>
#include <span>

namespace ash {

/// Lattice-key hash: each dimension is multiplied by its own odd 64-bit
/// constant, the products are XOR-combined, folded to 32 bits and reduced
/// modulo the bucket count.
uint64_t hash_key(std::span<const int32_t> key);

inline int64_t bucket_of(std::span<const int32_t> key, int64_t bucket_count) {
    return static_cast<int64_t>(hash_key(key) % static_cast<uint64_t>(bucket_count));
}

}  // namespace ash
