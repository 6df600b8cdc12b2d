#pragma once

#include <cmath>
#include <cstdint>

#include "aid/array.hpp"

namespace aid {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based random stream (Philox4x32-10, Salmon et al. 2011).
///
/// The generator is a pure function of (seed, stream_id, block counter), so a
/// stream is an immutable draw cursor: identical (seed, stream_id) always
/// replays the same sequence, and `split(k)` derives statistically
/// independent child streams without touching the parent. Key layout:
/// key = seed (two 32-bit words), counter = (block_lo, block_hi, stream_lo,
/// stream_hi). Each block yields two 64-bit words; uniforms take the top 53
/// bits; normals come from Box-Muller on consecutive uniforms.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    /// Child stream k; deterministic, independent of parent draw position.
    RngStream split(std::uint64_t k) const {
        return RngStream(seed_, detail::splitmix64(detail::splitmix64(stream_) + k + 1));
    }

    std::uint64_t next_u64() {
        if (buf_pos_ >= 2) refill();
        return buf_[buf_pos_++];
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; draws two uniforms per pair.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Complex value with independent standard-normal real and imaginary parts.
    cdouble cnormal() {
        double re = normal();
        double im = normal();
        return {re, im};
    }

    /// rows x cols array of cnormal() draws in row-major order.
    ComplexArray2D normal_array(int rows, int cols) {
        ComplexArray2D a(rows, cols);
        for (auto& z : a.data()) z = cnormal();
        return a;
    }

    /// Uniform integer in {lo, ..., hi} inclusive; rejection keeps it exact.
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        if (hi < lo) throw ArgumentError("uniform_int: empty range");
        std::uint64_t span = hi - lo + 1;
        if (span == 0) return next_u64();  // full 64-bit range
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return lo + x % span;
    }

private:
    void refill() {
        std::uint32_t c[4] = {
            static_cast<std::uint32_t>(block_),
            static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_),
            static_cast<std::uint32_t>(stream_ >> 32),
        };
        std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
        std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = 0xD2511F53ULL * c[0];
            std::uint64_t p1 = 0xCD9E8D57ULL * c[2];
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::uint32_t n0 = hi1 ^ c[1] ^ k0;
            std::uint32_t n1 = lo1;
            std::uint32_t n2 = hi0 ^ c[3] ^ k1;
            std::uint32_t n3 = lo0;
            c[0] = n0; c[1] = n1; c[2] = n2; c[3] = n3;
            k0 += 0x9E3779B9U;
            k1 += 0xBB67AE85U;
        }
        buf_[0] = (static_cast<std::uint64_t>(c[1]) << 32) | c[0];
        buf_[1] = (static_cast<std::uint64_t>(c[3]) << 32) | c[2];
        buf_pos_ = 0;
        ++block_;
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int buf_pos_ = 2;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace aid
