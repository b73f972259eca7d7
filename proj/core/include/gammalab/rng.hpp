#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gammalab {

namespace detail {

// splitmix64 finalizer (Steele/Lea/Flood; Vigna's fixed-increment variant).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL;

} // namespace detail

// Keyed counter-based stream: the i-th output is a pure function of
// (seed, stream_id, i). Distinct (seed, stream_id) pairs give streams that
// can be consumed concurrently without any coordination, so estimates are
// bit-reproducible regardless of how work is scheduled across threads.
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}

    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_(stream_id) {
        key_ = detail::mix64(detail::mix64(seed + detail::GOLDEN) ^
                             detail::mix64(stream_id + 0x123456789ABCDEFULL));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // Identifies the RNG lineage of an estimate.
    std::uint64_t fingerprint() const {
        return detail::mix64(key_ ^ detail::GOLDEN);
    }

    // Child streams are as independent as fresh (seed, stream) pairs.
    RngStream derive(std::uint64_t child) const {
        RngStream s;
        s.seed_ = seed_;
        s.stream_ = detail::mix64(stream_ + detail::GOLDEN * (child + 1));
        s.key_ = detail::mix64(detail::mix64(key_ + detail::GOLDEN) ^
                               detail::mix64(child + 0x0F0F0F0F0F0F0F0FULL));
        return s;
    }

    std::uint64_t next_u64() {
        return detail::mix64(key_ + detail::GOLDEN * ++counter_);
    }

    // Uniform on the open interval (0,1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are cached, so the k-th normal
    // of a stream is still a pure function of (seed, stream_id, k).
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace gammalab
