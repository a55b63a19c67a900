#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "halluguard/bundle.hpp"

namespace halluguard {

// Container layout (all integers little-endian, floats IEEE-754 binary32):
//
//   "HGB1" | u32 version | u32 K | u32 d | u32 ref_count | u8 has_label |
//   u8 label | f32 rouge_to_ref (NaN if absent) | str prompt_id |
//   str prompt_text | str reference * ref_count | u32 meta_count |
//   (str key, str value) * meta_count | generation * K
//
//   generation: u32 T | u8 has_states | u32 tokens[T] | f32 logprob[T] |
//               f32 step_entropy[T] | f32 step_lse[T] | str text |
//               f32 sent_embed[d] | f32 step_states[T*d] (if has_states)
//
//   str: u32 byte length followed by UTF-8 bytes.
inline constexpr char kBundleMagic[4] = {'H', 'G', 'B', '1'};
inline constexpr std::uint32_t kBundleVersion = 1;

// Size in bytes that write_bundle emits for this bundle.
std::size_t encoded_size(const TrajectoryBundle& bundle);

// Serializes a valid bundle. Throws Error(kNonFinite) for non-finite floats
// and Error(kInvalidBundle) for any other invariant violation.
std::size_t write_bundle(const TrajectoryBundle& bundle, std::ostream& sink);

// Inverse of write_bundle. Throws Error(kBadMagic), Error(kVersionMismatch),
// TruncatedError (naming the section) or, when `check` is set,
// Error(kInvalidBundle). Pass check = false to decode a malformed but
// well-framed bundle for inspection.
TrajectoryBundle read_bundle(std::istream& source, bool check = true);

std::size_t write_bundle_file(const TrajectoryBundle& bundle,
                              const std::filesystem::path& path);
TrajectoryBundle read_bundle_file(const std::filesystem::path& path, bool check = true);

}  // namespace halluguard
