#pragma once

#include <array>
#include <cstdint>

namespace shiftlab {

/// Philox 4x32-10 counter-based generator.  Each (seed, stream) pair keys
/// an independent substream, so trajectory i of a Monte-Carlo ensemble can
/// be assigned stream i and produces the same draws regardless of how the
/// ensemble is scheduled across workers.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    /// Uniform on (0,1), never returning an endpoint.
    double uniform();

    /// Standard normal via the inverse-CDF transform (one uniform per draw).
    double normal();

    static std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> ctr,
                                                     std::array<std::uint32_t, 2> key);

  private:
    std::uint64_t next_u64();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_ = 0;
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> block_{};
    unsigned block_pos_ = 4;
};

}  // namespace shiftlab
