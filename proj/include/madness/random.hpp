#pragma once

#include <cstdint>
#include <random>

namespace madness {

// Independent engine for stream `stream` of a run seeded with `master_seed`.
// Depends only on the two integers, so results do not change with the
// order or thread on which streams are consumed.
inline std::mt19937_64 stream_engine(std::uint64_t master_seed, std::uint64_t stream,
                                     std::uint64_t substream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream),
                      static_cast<std::uint32_t>(substream >> 32)};
    return std::mt19937_64(seq);
}

// Uniform on [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

}  // namespace madness
