#pragma once

#include <cstdint>
#include <random>

namespace csc {

// SplitMix64 finalizer; decorrelates nearby seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent generator for task `stream` under `master`. The same pair always
// yields the same sequence, whichever thread runs the task.
[[nodiscard]] inline std::mt19937_64 stream_rng(std::uint64_t master, std::uint64_t stream) {
    return std::mt19937_64(mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL)));
}

}  // namespace csc
