#ifndef HYPERTRAIN_RNG_HPP
#define HYPERTRAIN_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hypertrain {

/// splitmix64 step; used to derive independent sub-seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministically combine a master seed with stream tags (e.g. step index,
/// sample index) so each consumer gets an independent, reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(seed);
    for (std::uint64_t t : tags) s = splitmix64(s ^ (t + 0x9e3779b97f4a7c15ULL));
    return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

inline std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    return std::mt19937_64(derive_seed(seed, tags));
}

} // namespace hypertrain

#endif
