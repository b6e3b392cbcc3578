#pragma once

#include <cstdint>

namespace qsplit {

/// Counter-seeded xoshiro256++ stream. Identical (seed, stream_index) pairs
/// reproduce identical sample sequences on every platform, independent of the
/// standard library's distribution implementations.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t seed, std::uint64_t stream_index);

    std::uint64_t next_u64();
    double uniform();   // in (0, 1]
    double gaussian();  // standard normal (Box-Muller)

    /// Derives an independent stream; trial i of a Monte Carlo run uses
    /// substream(i) so parallel and serial execution sample identically.
    RngStream substream(std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_; }

private:
    std::uint64_t s_[4];
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace qsplit
