#pragma once

#include <cstdint>
#include <string_view>

namespace halluguard {

inline constexpr std::uint64_t kDefaultSeed = 20240917;

std::uint64_t splitmix64(std::uint64_t x);

// 64-bit FNV-1a of the bytes of `s`.
std::uint64_t fnv1a64(std::string_view s);

// Per-component seed: splitmix64(root ^ fnv1a64(component)). Sub-streams for
// an item i are derived as derive_seed(derive_seed(root, component), i).
std::uint64_t derive_seed(std::uint64_t root, std::string_view component);
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index);

}  // namespace halluguard
