#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace bsdelab {

/// Seed plus stream id; equal pairs produce bit-identical draws.
struct RandomSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    RandomSeed substream(std::uint64_t index) const noexcept;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Engine for one (seed, stream) pair.
std::mt19937_64 make_engine(RandomSeed s);

/// Uniform draw on [lo, hi) that does not depend on the standard library's
/// distribution implementation.
double uniform(std::mt19937_64& rng, double lo, double hi);

/// 64-bit FNV-1a, used for config hashes and instance fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept;

}  // namespace bsdelab
