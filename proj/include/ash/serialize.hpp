#pragma once

#include <filesystem>
#include <iosfwd>

#include "ash/hashmap.hpp"

namespace ash {

inline constexpr uint32_t kSnapshotVersion = 1;

/// Writes the map as a little-endian container:
///   "ASHL" | version u32 | capacity u64 | buckets u64 | size u64 | arity u32 |
///   schema count u32 | (element count u64, element bytes u64) per schema |
///   size rows of (arity i32 key, value bytes per schema)
/// Rows are the active entries in ascending buffer-index order.
void save_map(const HashMap &map, std::ostream &out);
void save_map(const HashMap &map, const std::filesystem::path &path);

/// Reconstructs a map with the stored capacity and content. Buffer
/// indices are reassigned. Throws std::runtime_error on a malformed stream.
HashMap load_map(std::istream &in, Backend backend = Backend::Generic, MapOptions options = {});
HashMap load_map(const std::filesystem::path &path, Backend backend = Backend::Generic,
                 MapOptions options = {});

}  // namespace ash
