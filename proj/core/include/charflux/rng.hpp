#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace charflux {

/// SplitMix64 finalizer. Used to derive stream keys from structured indices.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/**
 * Counter-based random stream (Philox4x32-10).
 *
 * A stream is identified by a 64-bit key; its output is a pure function of
 * (key, draw index). `child(i)` derives an independent stream keyed by the
 * parent key and `i`, so a tree such as
 *   RngStream(seed).child(replicate).child(site).child(slot)
 * gives every particle of every replicate its own reproducible stream no
 * matter which thread or in which order it is evaluated.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t seed = 0) noexcept : key_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    [[nodiscard]] RngStream child(std::uint64_t index) const noexcept {
        RngStream s;
        s.key_ = mix64(mix64(key_) ^ mix64(index + 0xA54FF53A5F1D36F1ULL));
        return s;
    }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

    result_type operator()() noexcept {
        if (buffered_ < 2) refill();
        const std::uint64_t hi = block_[4 - buffered_];
        const std::uint64_t lo = block_[5 - buffered_];
        buffered_ -= 2;
        return (hi << 32) | lo;
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    void refill() noexcept;

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int buffered_ = 0;
};

/// Standard normal via Box-Muller (one value per call).
double standard_normal(RngStream& rng) noexcept;

/// Exact Poisson draw: inversion below mean 30, PTRS transformed rejection above.
std::int64_t poisson(RngStream& rng, double mean);

/// Binomial(trials, p) by summing Bernoulli draws; intended for small trial counts.
std::int64_t binomial_small(RngStream& rng, std::int64_t trials, double p);

}  // namespace charflux
