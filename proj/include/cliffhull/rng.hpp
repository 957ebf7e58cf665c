#pragma once

#include <array>
#include <cstdint>

namespace cliffhull {

// Identifies one reproducible random stream. Distinct stream_index values under
// the same master_seed give statistically independent streams, so parallel
// workers can each own a stream and results stay invariant under scheduling.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

inline std::uint64_t splitmix64_step(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stable 64-bit mix of (master_seed, stream_index); also used as the per-trial
// seed value reported in trial records.
inline std::uint64_t mix_seed(SeedSpec s) {
    std::uint64_t z = s.master_seed;
    (void)splitmix64_step(z);
    z ^= 0xD1B54A32D192ED03ull * (s.stream_index + 1);
    return splitmix64_step(z);
}

// xoshiro256++ (Blackman/Vigna, public domain), seeded through splitmix64.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(SeedSpec seed) {
        std::uint64_t z = seed.master_seed;
        (void)splitmix64_step(z);
        z ^= 0xD1B54A32D192ED03ull * (seed.stream_index + 1);
        for (auto& w : s_) w = splitmix64_step(z);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_;
};

} // namespace cliffhull
