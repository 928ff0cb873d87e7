#ifndef NESTCAST_NUMCORE_RNG_HPP
#define NESTCAST_NUMCORE_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace nestcast::num {

/// Counter-based random stream (Philox4x32-10).
///
/// The 64-bit master seed is the Philox key; the stream index occupies the
/// upper half of the 128-bit counter and the block number the lower half, so
/// every (seed, stream) pair addresses a disjoint slice of one keyed
/// permutation.  Replaying a (seed, stream) pair reproduces the draw sequence
/// bit for bit regardless of thread placement.
///
/// Satisfies UniformRandomBitGenerator.  Not thread safe; each worker owns
/// its stream.
class RngStream {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint32_t algorithm_id = 0x50583410;  // "PX4" x 10 rounds

    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform() noexcept;

    /// Standard normal draw (Box-Muller on consecutive uniforms, pairs cached).
    double normal() noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// Raw Philox4x32-10 block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept;

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int buf_pos_ = 2;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace nestcast::num

#endif  // NESTCAST_NUMCORE_RNG_HPP
