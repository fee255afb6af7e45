#include "sdsim/rng.hpp"

#include <cmath>

namespace sds::rng {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

Stream::Stream(std::uint64_t seed) {
    // SplitMix64 sequence fills the state; never all-zero.
    std::uint64_t z = seed;
    for (auto& w : s_) {
        z = mix64(z);
        w = z;
    }
    s_[0] |= 1;
}

Stream Stream::derive(std::uint64_t master, std::initializer_list<std::uint64_t> indices) {
    std::uint64_t acc = mix64(master);
    for (std::uint64_t idx : indices) {
        acc = mix64(acc ^ mix64(idx + 0x632be59bd9b4e019ULL));
    }
    return Stream(acc);
}

std::uint64_t Stream::next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Stream::uniform() {
    // 53-bit mantissa shifted into (0,1): never returns 0 or 1.
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

} // namespace sds::rng
