// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace subgeo {

/// Mixes (seed, index) into a new 64-bit seed with one SplitMix64 round per
/// component. This is the documented stream-derivation rule: run i of a
/// sweep, block b of a multi-block run, and task t of a sequence all draw
/// from Rng::stream(label, derive_seed(seed, index)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// xoshiro256** seeded through SplitMix64. Deterministic, splittable by
/// (label, seed, index); not cryptographic. One instance per logical stream;
/// instances are not thread-safe, streams are.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Named stream: state seeded from SplitMix64 over
    /// seed ^ fnv1a(label) ^ derive_seed(seed, index).
    static Rng stream(std::string_view label, std::uint64_t seed, std::uint64_t index = 0);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01();

    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; the spare draw is cached, so a single
    /// stream consumed in a fixed order is fully reproducible.
    double gaussian();

private:
    std::array<std::uint64_t, 4> state_{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace subgeo
