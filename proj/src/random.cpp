#include "lipdoi/random.hpp"

#include <cmath>
#include <numbers>

namespace lipdoi {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;
}  // namespace

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(base);
    for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + kGamma));
    return h;
}

std::uint64_t CounterRng::next_u64() noexcept {
    ++counter_;
    return mix64(seed_ + counter_ * kGamma);
}

double CounterRng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * kTwoPow53Inv; }

double CounterRng::normal() noexcept {
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * kTwoPow53Inv;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double CounterRng::sign() noexcept { return (next_u64() >> 63) != 0 ? 1.0 : -1.0; }

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
    if (bound == 0) return 0;
    return next_u64() % bound;
}

}  // namespace lipdoi
