#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lggd {

using Rng = std::mt19937_64;

/// Seed splitting: every consumer of randomness gets its own stream,
///   derive_seed(seed, tag) = splitmix64(seed ^ fnv1a(tag)).
/// Streams for different tags are independent of call order.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;

inline Rng make_rng(std::uint64_t seed, std::string_view tag) { return Rng(derive_seed(seed, tag)); }

}  // namespace lggd
