#pragma once

#include <cstdint>
#include <initializer_list>

namespace sds::rng {

/// Deterministic random stream (xoshiro256++ core, SplitMix64 seeding).
///
/// Streams for parallel work are derived from a master seed plus a list of
/// indices (path number, refinement level, ...). The derivation is a pure
/// function of (seed, indices), so results never depend on which thread or
/// in which order a stream is consumed.
class Stream {
public:
    explicit Stream(std::uint64_t seed);

    /// Derive an independent stream from a master seed and an index path,
    /// e.g. derive(seed, {level, path}).
    static Stream derive(std::uint64_t master, std::initializer_list<std::uint64_t> indices);

    std::uint64_t next_u64();

    /// Uniform draw in the open interval (0, 1).
    double uniform();

    /// Standard normal draw (Box-Muller, one value per call).
    double normal();

private:
    std::uint64_t s_[4];
};

/// SplitMix64 finalizer used for seeding and index mixing.
std::uint64_t mix64(std::uint64_t z);

} // namespace sds::rng
