#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace depara {

/// xoshiro256** seeded through splitmix64.
///
/// Seeding: the splitmix64 state starts at seed ^ splitmix64_mix(stream + 1)
/// and its first four outputs become the xoshiro state words s0..s3.
/// uniform() = (next() >> 11) * 2^-53. normal() applies Box-Muller to two
/// successive uniforms u1, u2: r = sqrt(-2 ln(1 - u1)), returning r*cos(2 pi u2)
/// and then r*sin(2 pi u2) on the following call.
class Xoshiro256ss {
public:
    Xoshiro256ss(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t sm = seed ^ splitmix64_mix(stream + 1);
        for (auto& word : s_) word = splitmix64_next(sm);
    }

    /// Raw state, bypassing seeding.
    static Xoshiro256ss from_state(std::uint64_t s0, std::uint64_t s1, std::uint64_t s2, std::uint64_t s3) noexcept {
        Xoshiro256ss rng;
        rng.s_[0] = s0;
        rng.s_[1] = s1;
        rng.s_[2] = s2;
        rng.s_[3] = s3;
        return rng;
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    static constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

private:
    Xoshiro256ss() = default;

    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    static constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
        state += 0x9E3779B97F4A7C15ull;
        return splitmix64_mix(state);
    }

    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace depara
