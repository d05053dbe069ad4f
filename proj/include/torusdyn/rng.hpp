#pragma once

#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace torusdyn {

/// SplitMix64 as a UniformRandomBitGenerator. One 64-bit word of state, so
/// every simulated point can carry its own stream.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    constexpr SplitMix64() noexcept = default;
    constexpr explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

    friend constexpr bool operator==(const SplitMix64&, const SplitMix64&) = default;

private:
    std::uint64_t state_ = 0;
};

/// Counter-based child key: a pure function of (root, a, b). Used to hand out
/// independent streams to replicates and points without any shared state.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) noexcept {
    std::uint64_t h = SplitMix64::mix(root ^ 0x6a09e667f3bcc909ULL);
    h = SplitMix64::mix(h ^ (a + 0x9e3779b97f4a7c15ULL));
    h = SplitMix64::mix(h ^ (b + 0xbb67ae8584caa73bULL));
    return h;
}

// Boost distributions are used instead of <random> ones because their output
// is fixed by the library rather than by the standard library vendor.

template <typename Rng>
double uniform01(Rng& rng) {
    return boost::random::uniform_01<double>{}(rng);
}

template <typename Rng>
double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

template <typename Rng>
double standard_normal(Rng& rng) {
    return boost::random::normal_distribution<double>{}(rng);
}

template <typename Rng>
double exponential(Rng& rng, double rate = 1.0) {
    return boost::random::exponential_distribution<double>{rate}(rng);
}

template <typename Rng>
std::uint64_t poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    return static_cast<std::uint64_t>(boost::random::poisson_distribution<long long, double>{mean}(rng));
}

} // namespace torusdyn
