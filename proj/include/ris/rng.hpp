#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ris {

// Counter-based RNG (Philox4x32-10). A stream is identified by
// (seed, stream_id); identical pairs reproduce identical sequences and
// distinct pairs give statistically independent output, which is what the
// replica machinery relies on for parallel reproducibility.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id), counter_(0), have_spare_(false), spare_(0) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }
    std::uint64_t draws() const { return counter_; }

    std::uint64_t next_u64() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        std::uint32_t c0 = static_cast<std::uint32_t>(counter_);
        std::uint32_t c1 = static_cast<std::uint32_t>(counter_ >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(stream_id_);
        std::uint32_t c3 = static_cast<std::uint32_t>(stream_id_ >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
        std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
        ++counter_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = 0xD2511F53ULL * c0;
            std::uint64_t p1 = 0xCD9E8D57ULL * c2;
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            std::uint32_t n0 = hi1 ^ c1 ^ k0;
            std::uint32_t n2 = hi0 ^ c3 ^ k1;
            c0 = n0; c1 = lo1; c2 = n2; c3 = lo0;
            k0 += 0x9E3779B9U;
            k1 += 0xBB67AE85U;
        }
        spare_ = (static_cast<std::uint64_t>(c2) << 32) | c3;
        have_spare_ = true;
        return (static_cast<std::uint64_t>(c0) << 32) | c1;
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1].
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
        return -std::log(uniform_pos()) / rate;
    }

    // Unbiased integer in [0, n) by rejection on the top bits.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
        if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    std::uint64_t poisson(double lambda);

private:
    std::uint64_t poisson_inversion(double lambda);
    std::uint64_t poisson_ptrd(double lambda);

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_;
    bool have_spare_;
    std::uint64_t spare_;
};

// Purpose tags keep the independent random elements of one replica on
// disjoint streams: counts, the zeta decision uniforms, the Poisson clock
// levels, excursion paths, the coupling resampling draws, and the glued
// process appended above the working curves.
enum class RngPurpose : std::uint64_t {
    Counts = 0,
    Zeta = 1,
    Clocks = 2,
    Paths = 3,
    Coupling = 4,
    Glue = 5,
    Oracle = 6,
    Analysis = 7,
};

inline constexpr std::uint64_t kRngPurposeCount = 8;

// Collision-free: distinct (replica, purpose) map to distinct stream ids,
// and repeated derivation of the same triple returns the same stream.
inline RngStream seed_derive(std::uint64_t master_seed, std::uint64_t replica_id, RngPurpose purpose) {
    const std::uint64_t sid = (replica_id * kRngPurposeCount) + static_cast<std::uint64_t>(purpose);
    return RngStream(master_seed, sid);
}

} // namespace ris
