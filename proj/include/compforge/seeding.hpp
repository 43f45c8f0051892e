#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace compforge {

// Stable 64-bit FNV-1a. std::hash is not stable across standard libraries,
// and derived seeds must be reproducible everywhere.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Per-record seed derived from the global seed and a record key.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key);

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t global_seed, std::string_view key) {
    return Rng(derive_seed(global_seed, key));
}

/// Uniform double in [0, 1) with 53 random bits. Used instead of
/// std::uniform_real_distribution, whose output is implementation-defined.
double uniform01(Rng& rng);

/// Uniform integer in [0, bound) by rejection; bound must be > 0.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

}  // namespace compforge
