/*
Counter-based deterministic random streams for reproducible simulations.
*/

#pragma once

#include <cstdint>
#include <limits>

namespace polarsc {

namespace detail {

// Murmur3/splitmix-style 64-bit finalizer; bijective on uint64.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

// Stateless counter construction: word t of stream (seed, stream_id) is a pure
// hash of the triple, so distinct streams never share a counter space and any
// trial can be regenerated in isolation.
class CounterRng {
   public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream_id) noexcept
        : key_(detail::mix64(seed + detail::kGolden * stream_id) ^ detail::mix64(stream_id + 1)) {}

    std::uint64_t next_u64() noexcept { return detail::mix64(key_ ^ (counter_++ + detail::kGolden)); }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // UniformRandomBitGenerator interface.
    std::uint64_t operator()() noexcept { return next_u64(); }
    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return std::numeric_limits<std::uint64_t>::max(); }

   private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace polarsc
