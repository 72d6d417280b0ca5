#include "bsdelab/random.hpp"

#include <cstring>

namespace bsdelab {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

RandomSeed RandomSeed::substream(std::uint64_t index) const noexcept {
    return {seed, splitmix64(stream ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

std::mt19937_64 make_engine(RandomSeed s) {
    std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                      static_cast<std::uint32_t>(s.stream), static_cast<std::uint32_t>(s.stream >> 32)};
    return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    // 53 random bits mapped to [0, 1).
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) noexcept {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h) noexcept {
    for (double v : values) {
        unsigned char raw[sizeof(double)];
        std::memcpy(raw, &v, sizeof(double));
        h = fnv1a(std::string_view(reinterpret_cast<const char*>(raw), sizeof(double)), h);
    }
    return h;
}

}  // namespace bsdelab
