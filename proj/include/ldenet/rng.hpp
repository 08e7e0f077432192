#ifndef LDENET_RNG_HPP
#define LDENET_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>

namespace ldenet {

/**
 * Seeded, splittable random stream built on xoshiro256++ with SplitMix64
 * state expansion.
 *
 * Contract: identical (seed, stream) pairs produce bit-identical variate
 * sequences across runs and platforms. Streams derived from distinct
 * (seed, stream) pairs are statistically independent, so each Monte-Carlo
 * path can own one stream and paths may be evaluated concurrently.
 *
 * All floating-point draws are derived from the raw 64-bit output directly
 * (never through std:: distributions, whose sequences are
 * implementation-defined).
 */
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {
        // SplitMix64 over a mix of seed and stream fills the 256-bit state.
        std::uint64_t z = seed ^ splitmix_const(stream + 0x632be59bd9b4e019ULL);
        for (auto& s : state_) {
            z = splitmix_const(z);
            s = z;
        }
        // xoshiro must not start from the all-zero state
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1); safe as a log/tan argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe under -log.
    double uniform_closed_top() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (two uniforms per call, no caching).
    double gaussian() {
        const double u1 = uniform_open();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Unit-rate exponential.
    double exponential() { return -std::log(uniform_open()); }

    /// Integer in [0, n) without modulo bias (n > 0).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /**
     * Independent stream derived from this stream's identity and an index.
     * Derivation uses only (seed, stream, idx), never the current state, so
     * path streams are reproducible regardless of how much the parent has
     * already been consumed.
     */
    RngStream substream(std::uint64_t idx) const {
        return RngStream(seed_, splitmix_const(stream_ ^ (0xbf58476d1ce4e5b9ULL * (idx + 1))));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    static std::uint64_t splitmix_const(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::array<std::uint64_t, 4> state_{};
    std::uint64_t seed_;
    std::uint64_t stream_;
};

} // namespace ldenet

#endif
