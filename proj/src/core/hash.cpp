#include "ash/hash.hpp"

#include <array>

namespace ash {
namespace {

// Odd multipliers; the first three are the classic spatial-hash primes.
constexpr std::array<uint64_t, 8> kMultipliers = {
        73856093ULL,           19349663ULL,           83492791ULL,
        0x9E3779B97F4A7C15ULL, 0xC2B2AE3D27D4EB4FULL, 0x165667B19E3779F9ULL,
        0xD6E8FEB86659FD93ULL, 0xFF51AFD7ED558CCDULL,
};

}  // namespace

uint64_t hash_key(std::span<const int32_t> key) {
    uint64_t h = 0;
    for (size_t d = 0; d < key.size(); ++d) {
        const uint64_t k = static_cast<uint32_t>(key[d]);
        // Dimensions beyond the table get an even offset, which keeps them odd.
        const uint64_t m = kMultipliers[d % kMultipliers.size()] +
                           2 * (d / kMultipliers.size()) * 0x9E3779B97F4A7C15ULL;
        h ^= k * m;
    }
    h ^= h >> 32;
    h *= 0x9E3779B1ULL;
    return (h ^ (h >> 29)) & 0xFFFFFFFFULL;
}

}  // namespace ash
