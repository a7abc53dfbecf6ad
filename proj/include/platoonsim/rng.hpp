// SPDX-License-Identifier: Apache-2.0
//
// platoonsim: 5G eV2X vehicle-platoon communication simulator

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace platoonsim {

// Philox4x32-10 (Salmon et al., Random123). Counter-based: every output block
// is a pure function of (key, counter), so any implementation that follows the
// layout documented in README.md reproduces the same streams.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr Counter block(Counter ctr, Key key)
    {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// What a stream is used for; occupies counter word 3.
enum class StreamPurpose : std::uint32_t {
    SeedDerivation = 1,
    Shadowing = 2,
    FadingParams = 3,
    Decode = 4,
    Test = 0xFFu,
};

/// A sequential stream over Philox blocks.
///
/// Layout: key = {seed & 0xffffffff, seed >> 32};
/// counter = {block index, id_a, id_b, purpose}. Words are consumed in order
/// w0..w3 of each block; a uniform double takes two consecutive words
/// (hi, lo) and maps ((hi << 32 | lo) >> 11) * 2^-53.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamPurpose purpose, std::uint32_t id_a, std::uint32_t id_b)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          id_a_(id_a), id_b_(id_b), purpose_(static_cast<std::uint32_t>(purpose))
    {
    }

    std::uint32_t next_u32()
    {
        if (word_ == 4) {
            buffer_ = Philox4x32::block({block_, id_a_, id_b_, purpose_}, key_);
            ++block_;
            word_ = 0;
        }
        return buffer_[word_++];
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller, cosine branch only (one draw per pair).
    double normal()
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    Philox4x32::Key key_;
    std::uint32_t id_a_;
    std::uint32_t id_b_;
    std::uint32_t purpose_;
    std::uint32_t block_ = 0;
    std::uint32_t word_ = 4;
    Philox4x32::Counter buffer_{};
};

/// Seed of one campaign run: first 64 bits of
/// Philox(key = base seed, counter = {point, replication, 0, SeedDerivation}).
inline std::uint64_t derive_run_seed(std::uint64_t base_seed, std::uint32_t point, std::uint32_t replication)
{
    RandomStream s(base_seed, StreamPurpose::SeedDerivation, point, replication);
    return s.next_u64();
}

} // namespace platoonsim
