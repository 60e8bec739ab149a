#ifndef TADKIT_PRNG_HPP
#define TADKIT_PRNG_HPP

#include <cmath>
#include <cstdint>

namespace tadkit {

// Counter-based 64-bit generator built on the splitmix64 finalizer.
// Every draw is a pure function of (seed, counter), so substreams can be
// addressed directly and generation is identical across platforms.
inline constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline uint64_t splitmix64(uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Derive a substream seed from a parent seed and a stream tag.
inline uint64_t mix_seed(uint64_t seed, uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag));
}

class Prng {
public:
    explicit Prng(uint64_t seed) : seed_(seed) {}

    uint64_t next_u64() { return splitmix64(seed_ + (++counter_) * kGolden); }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n); n > 0.
    uint64_t next_below(uint64_t n) {
        // 128-bit multiply keeps the mapping unbiased enough for data
        // generation while staying platform-deterministic.
        return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // Uniform integer in [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller (fixed algorithm, not std::normal_distribution,
    // whose output is implementation-defined).
    double gaussian() {
        double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

private:
    uint64_t seed_;
    uint64_t counter_ = 0;
};

}  // namespace tadkit

#endif
