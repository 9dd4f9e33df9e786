#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace bubblelab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A block is a
// pure function of (key, counter), so any path's stream can be regenerated
// without touching any other path.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block ctr, Key key) noexcept {
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

// Per-path random stream keyed by (seed, path_id). Draw order within a path
// is fixed by the caller, so results do not depend on scheduling.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path_id) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path_id)),
          path_hi_(static_cast<std::uint32_t>(path_id >> 32)) {}

    // Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept {
        const std::uint64_t a = next_word() >> 5;
        const std::uint64_t b = next_word() >> 6;
        const std::uint64_t bits = (a << 26) | b;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    double normal() noexcept {
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

    // Standard exponential; 2 * exponential() is chi-square with two degrees of freedom.
    double exponential() noexcept { return -std::log(uniform()); }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = next_word();
        return (hi << 32) | next_word();
    }

private:
    std::uint32_t next_word() noexcept {
        if (word_ == 4) {
            block_ = Philox4x32::generate({static_cast<std::uint32_t>(counter_),
                                           static_cast<std::uint32_t>(counter_ >> 32), path_lo_,
                                           path_hi_},
                                          key_);
            ++counter_;
            word_ = 0;
        }
        return block_[word_++];
    }

    Philox4x32::Key key_;
    std::uint32_t path_lo_;
    std::uint32_t path_hi_;
    std::uint64_t counter_ = 0;
    Philox4x32::Block block_{};
    int word_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Lets a PathRng drive the <random> distributions.
class PathUrbg {
public:
    using result_type = std::uint64_t;

    explicit PathUrbg(PathRng& rng) noexcept : rng_(&rng) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }
    result_type operator()() noexcept { return rng_->next_u64(); }

private:
    PathRng* rng_;
};

}  // namespace bubblelab
