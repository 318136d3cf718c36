#ifndef FLEX_RNG_HPP
#define FLEX_RNG_HPP

#include <cmath>
#include <cstdint>

namespace flex {

// SplitMix64 generator. Chosen over std::mt19937 because the stream is
// fully specified by the algorithm below, so seeded runs reproduce across
// compilers and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0, 1], safe as a log() argument
    double next_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (one draw per call; the sine twin is
    // discarded so consumption is exactly two uniforms per normal)
    double normal() {
        double u1 = next_open();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // index in [0, n)
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Derives an independent stream id from (seed, tag). Used to hand each
    // episode / worker its own deterministic substream.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

} // namespace flex

#endif
