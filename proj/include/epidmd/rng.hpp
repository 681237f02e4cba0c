#pragma once

#include <cstdint>

namespace epidmd {

// Counter-based splittable generator built on the splitmix64 finalizer.
// A stream is identified by a key derived from the master seed plus up to
// three substream indices; successive outputs hash an incrementing counter,
// so any stream can be reproduced independently of draw order elsewhere.
//
// Substream scheme used by the simulator: one stream per (farm, day) for
// intra-farm epidemiology, one per (edge, day) for shipments, one per farm
// for contact-graph construction. This makes trajectories bit-identical
// regardless of how farms are scheduled across threads.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(mix(key)), counter_(0) {}

    static Rng substream(std::uint64_t seed, std::uint64_t tag,
                         std::uint64_t a = 0, std::uint64_t b = 0) {
        std::uint64_t k = mix(seed + 0x9e3779b97f4a7c15ULL);
        k = mix(k ^ mix(tag + 0xbf58476d1ce4e5b9ULL));
        k = mix(k ^ mix(a + 0x94d049bb133111ebULL));
        k = mix(k ^ mix(b + 0xd6e8feb86659fd93ULL));
        return Rng(k);
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform01() < p;
    }

    // Unbiased integer in [0, n), Lemire's method.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        while (true) {
            std::uint64_t x = next_u64();
            __uint128_t m = static_cast<__uint128_t>(x) * n;
            auto lo = static_cast<std::uint64_t>(m);
            if (lo >= n || lo >= (0ULL - n) % n) return static_cast<std::uint64_t>(m >> 64);
        }
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return lo + below(hi - lo + 1);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ULL;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

// Substream domain tags.
namespace rng_tag {
inline constexpr std::uint64_t contact_graph = 1;
inline constexpr std::uint64_t farm_day = 2;
inline constexpr std::uint64_t edge_day = 3;
inline constexpr std::uint64_t outbreak = 4;
inline constexpr std::uint64_t network = 5;
inline constexpr std::uint64_t attach = 6;
} // namespace rng_tag

} // namespace epidmd
