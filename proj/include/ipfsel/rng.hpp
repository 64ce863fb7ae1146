#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ipfsel {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based stream derivation: the seed of a child stream depends only
// on the parent seed and the tag path, never on how many draws other streams
// consumed. Replicates therefore stay independent of execution order.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t s = splitmix64(parent);
    for (auto t : tags) s = splitmix64(s ^ splitmix64(t + 0x632be59bd9b4e019ULL));
    return s;
}

// Stream tags used across modules.
namespace stream {
inline constexpr std::uint64_t simulate = 1;
inline constexpr std::uint64_t folds = 2;
inline constexpr std::uint64_t subsamples = 3;
inline constexpr std::uint64_t resample = 4;
inline constexpr std::uint64_t permute = 5;
} // namespace stream

} // namespace ipfsel
