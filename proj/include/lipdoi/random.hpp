#pragma once

#include <cstdint>
#include <initializer_list>

namespace lipdoi {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

// Derives an independent stream seed from a base seed and a list of keys
// (e.g. dimension and instance index), so each instance's draws do not depend
// on iteration order.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept;

// Counter-based generator: draw k is mix64(seed + k * 0x9E3779B97F4A7C15),
// i.e. the SplitMix64 sequence. Normals use Box-Muller (cosine branch only),
// so every draw consumes exactly two 64-bit words and the stream is fully
// specified by the seed.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t next_u64() noexcept;
    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double normal() noexcept;
    // +1 or -1 with equal probability.
    double sign() noexcept;
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace lipdoi
