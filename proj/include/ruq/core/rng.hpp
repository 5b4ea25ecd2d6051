#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ruq {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of the named sub-stream `stream` (and item `index`) derived from a root seed.
/// Every random decision in the pipeline draws from one of these streams.
std::uint64_t stream_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) noexcept;

inline Rng make_rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0)
{
    return Rng(stream_seed(root, stream, index));
}

} // namespace ruq
