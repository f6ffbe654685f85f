#pragma once

// Counter-based random numbers (Philox4x32-10). Every draw is a pure function
// of (key, counter), so streams can be addressed directly by
// (seed, sample index, step index) without any shared generator state.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace wmsim {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter apply(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Sequential view over one Philox substream. The substream is identified by
/// (seed, stream, substream); draws advance a private block counter.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t substream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream), substream_(substream) {}

    /// Uniform double in the open interval (0, 1), 53 random bits.
    double uniform() {
        const std::uint64_t bits = next_u64() >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    std::uint64_t next_u64() {
        if (lane_ == 2) {
            refill();
        }
        return buffer_[lane_++];
    }

private:
    void refill() {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                                      substream_, block_++};
        const auto out = Philox4x32::apply(ctr, key_);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        lane_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint32_t substream_;
    std::uint32_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int lane_ = 2;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace wmsim
