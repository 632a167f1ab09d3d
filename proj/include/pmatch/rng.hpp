#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random streams for reproducible, order-independent
// simulation.  Each simulation run gets its own stream keyed by
// (seed, run index), so results are byte-identical no matter how the
// runs are distributed over worker threads.

namespace pmatch::simulate {

namespace detail {

// One Philox4x32 block: 10 S-P rounds over a 128-bit counter with a
// 64-bit key.  Matches the reference algorithm's published test vectors.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t mul0 = 0xD2511F53u;
    constexpr std::uint32_t mul1 = 0xCD9E8D57u;
    constexpr std::uint32_t bump0 = 0x9E3779B9u; // golden ratio
    constexpr std::uint32_t bump1 = 0xBB67AE85u; // sqrt(3) - 1

    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(mul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(mul1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
        key[0] += bump0;
        key[1] += bump1;
    }
    return ctr;
}

} // namespace detail

// A deterministic stream of uniforms and normals.  The key carries the
// user seed; counter words 2..3 carry the stream id (one stream per
// simulation run) and words 0..1 count blocks within the stream.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          base_{static_cast<std::uint32_t>(stream_id),
                static_cast<std::uint32_t>(stream_id >> 32)} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return block_[pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Standard normal by the Marsaglia polar method.  The method is part
    // of the reproducibility contract: outputs are consumed in pairs and
    // the spare deviate is cached, so a stream's normal sequence is a
    // fixed function of (seed, stream id).
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * next_double() - 1.0;
            v = 2.0 * next_double() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        has_spare_ = true;
        return u * scale;
    }

private:
    void refill() {
        block_ = detail::philox4x32_10(
            {static_cast<std::uint32_t>(counter_),
             static_cast<std::uint32_t>(counter_ >> 32), base_[0], base_[1]},
            key_);
        ++counter_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 2> base_; // stream id, fixed for the stream's life
    std::uint64_t counter_ = 0;          // block index within the stream
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace pmatch::simulate
