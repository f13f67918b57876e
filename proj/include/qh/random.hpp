#pragma once

#include <cstdint>
#include <random>

namespace qh {

// Every stochastic operation takes one of these explicitly; identical seeds
// reproduce identical runs bit-for-bit.
using Rng = std::mt19937_64;

// splitmix64 finalizer (Vigna). Used to derive independent-looking substream
// seeds from (seed, index...) tuples so that batch runs are reproducible
// regardless of execution order.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index, Rest... rest) {
    return mix_seed(splitmix64(seed ^ splitmix64(index + 0x7fb5d329728ea185ULL)), rest...);
}

// Substream generator for run `indices...` of a batch keyed by `seed`.
template <typename... Indices>
Rng substream(std::uint64_t seed, Indices... indices) {
    return Rng(mix_seed(seed, static_cast<std::uint64_t>(indices)...));
}

} // namespace qh
