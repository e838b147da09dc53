#pragma once

// Deterministic single-level chunking. Two schemes:
//
//   Static          - cut at fixed multiples of the target length.
//   ContentDefined  - slide a W-byte window over the content and cut
//                     after a window whose polynomial rolling hash h
//                     satisfies h % target == target - 1.
//
// A cut offset i lies strictly inside (0, n) and ends the chunk [prev, i),
// i.e. the window-final byte belongs to the left chunk. Splitting at the
// cut offsets and concatenating always reconstructs the input.

#include <cstdint>
#include <optional>
#include <vector>

#include "mlcs/bytes.hpp"

namespace mlcs {

enum class Scheme { kStatic, kContentDefined };

std::string_view to_string(Scheme scheme);                  // "sc" / "cdc"
std::optional<Scheme> parse_scheme(std::string_view name);

inline constexpr std::uint32_t kDefaultWindow = 48;

// Rolling-hash constants are part of the on-disk compatibility contract:
// changing the multiplier moves every chunk boundary and therefore every
// stored key. The value is recorded in the store manifest.
inline constexpr std::uint64_t kRollingHashMultiplier = 0x9E3779B97F4A7C15ULL;

struct ChunkerSpec {
  Scheme scheme = Scheme::kContentDefined;
  std::uint64_t target_length = 0;  // expected chunk length, >= 1

  // Content-defined only.
  std::uint32_t window = kDefaultWindow;
  std::optional<std::uint64_t> min_length;  // suppress cuts closer than this
  std::optional<std::uint64_t> max_length;  // force a cut at this length

  // Throws std::invalid_argument on violated constraints.
  void validate() const;
};

// Strictly increasing cut offsets in (0, n). Content-defined cuts never
// occur before the first full window; min/max rules apply when configured.
std::vector<std::uint64_t> boundaries(const ChunkerSpec& spec,
                                      ByteView content);

// Views into `content` split at boundaries(). Empty content yields one
// empty chunk so that every content has a chunk representation.
std::vector<ByteView> split(const ChunkerSpec& spec, ByteView content);

}  // namespace mlcs
