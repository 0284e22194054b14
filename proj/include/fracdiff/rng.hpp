#pragma once

// Counter-based random streams (Philox4x32-10). A stream is addressed by
// (seed, stream, substream); the same address always yields the same sequence,
// and distinct addresses use disjoint counters, so paths can be simulated in any
// order or on any number of workers with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fracdiff {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline Counter round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t(kMul0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kMul1) * c[2];
    return {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1), std::uint32_t(p0 >> 32) ^ c[3] ^ k[1],
            std::uint32_t(p0)};
}

/// Ten-round Philox4x32 bijection.
inline Counter block(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        c = round(c, k);
    }
    return c;
}

}  // namespace philox

class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint32_t stream = 0, std::uint32_t substream = 0)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream), substream_(substream) {}

    std::uint32_t next_u32() {
        if (index_ == 4) refill();
        return buffer_[index_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Exp(1).
    double exponential() { return -std::log(uniform()); }

    /// N(0, 1) by Box-Muller; the second variate of each pair is kept for the next call.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t blocks_used() const { return block_; }

private:
    void refill() {
        buffer_ = philox::block({std::uint32_t(block_), std::uint32_t(block_ >> 32), substream_, stream_}, key_);
        ++block_;
        index_ = 0;
    }

    philox::Key key_;
    std::uint32_t stream_;
    std::uint32_t substream_;
    std::uint64_t block_ = 0;
    philox::Counter buffer_{};
    int index_ = 4;
    bool has_spare_ = false;
    double spare_ = 0;
};

}  // namespace fracdiff
