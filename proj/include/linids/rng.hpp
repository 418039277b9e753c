#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace linids {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

/**
 * Reproducible random stream identified by (seed, stream_id).
 *
 * The generator is xoshiro256** whose 256-bit state is filled by SplitMix64
 * from a mix of seed and stream id. Uniforms use the top 53 bits; normals use
 * the Marsaglia polar method (only sqrt and log, no trigonometry), so the
 * sequence depends on nothing but IEEE-754 arithmetic and the libm log.
 */
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept : seed_(seed), stream_id_(stream_id) {
        std::uint64_t sm = seed ^ detail::rotl(stream_id * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL, 17);
        for (auto& word : state_)
            word = detail::splitmix64(sm);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire-style rejection keeps the draw unbiased.
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold)
                return r % n;
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stream ids used by the harness: one stream per (repetition, purpose).
enum class StreamPurpose : std::uint64_t { instance = 0, noise = 1, policy = 2 };

inline RngStream derive_stream(std::uint64_t base_seed, std::uint64_t run_index, StreamPurpose purpose) noexcept {
    return RngStream(base_seed, run_index * 4 + static_cast<std::uint64_t>(purpose));
}

} // namespace linids
