#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace fluorosim {

// Seeded random stream with platform-independent output.
//
// Streams are derived from (seed, domain, index) so that every work unit
// (phantom generation, one scan cell, ...) owns an independent sequence and
// results do not depend on evaluation order. Normal deviates use Box-Muller on
// top of the raw 64-bit engine because std::normal_distribution is not
// reproducible across standard library implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(mix(seed)) {}

    static RandomStream derive(std::uint64_t seed, std::uint64_t domain, std::uint64_t index = 0) {
        return RandomStream(mix(seed ^ mix(domain + 0x632be59bd9b4e019ULL) ^ mix(index * 0x9e3779b97f4a7c15ULL + 1)));
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::uint64_t next_u64() { return engine_(); }

private:
    // SplitMix64 finalizer.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream domains; one per consumer so substreams never collide.
namespace stream_domain {
inline constexpr std::uint64_t phantom = 1;
inline constexpr std::uint64_t raster = 2;
inline constexpr std::uint64_t line = 3;
inline constexpr std::uint64_t synth = 4;
}  // namespace stream_domain

}  // namespace fluorosim
