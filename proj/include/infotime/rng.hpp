#pragma once

#include <cstdint>
#include <random>

namespace infotime {

/// splitmix64 mix step; used to derive independent seed streams from one
/// master seed so that run results do not depend on scheduling order.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive a child seed from (master, salt). Distinct salts give streams
/// that are independent for practical purposes.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
    return mix_seed(master ^ mix_seed(salt));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t salt = 0) {
    return Rng(derive_seed(master, salt));
}

} // namespace infotime
