#pragma once

// Closed-form storage-cost bounds for the multi-level chunk store,
// used as oracles against measured storage deltas. All functions are
// pure and real-valued; callers compare against measured bytes.
//
// Conventions: n = content length, S = chunk_size (target chunk size),
// R = ref_size, D = tag_size, W = window, h = tree height,
// delta = length of the modified byte sequence.

#include <cstdint>

#include "mlcs/chunking.hpp"
#include "mlcs/crypto.hpp"

namespace mlcs::model {

// Expected node count of a chunk tree over n content bytes: ceil(2n/S).
// Holds when S >= 2R, so superchunks average at least two children and
// leaves outnumber inner nodes.
double exp_nodes(std::uint64_t n, std::uint64_t chunk_size);

// Storage bound for inserting n fresh bytes: (D + S) * exp_nodes.
double storage_full(std::uint64_t n, std::uint64_t chunk_size,
                    std::uint64_t tag_size = kTagSize);

// New bytes stored for a one-byte overwrite under static chunking:
// exactly one changed node per level, (D + S) * (h + 1).
double add_strg_sc(std::uint32_t height, std::uint64_t chunk_size,
                   std::uint64_t tag_size = kTagSize);

// Expected number of changed tree nodes for a one-byte overwrite under
// content-defined chunking. A changed byte can flip up to W boundaries
// per level; with per-position boundary probability p each flip costs
// up to 3 extra nodes in expectation:
//   1 + sum over levels of (1 + 3 W p (1 - p)),  p = R^h' / S^(h'+1).
double exp_new_nodes_cdc(std::uint32_t height, std::uint64_t chunk_size,
                         std::uint64_t ref_size = kRefSize,
                         std::uint32_t window = kDefaultWindow);

// Upper bound, 2S, on the expected size of the chunk covering a
// uniformly random position (longer chunks cover more positions,
// biasing the size of a hit chunk upward).
double exp_chunk_size_cdc(std::uint64_t chunk_size);

// Storage bound for a one-byte overwrite under content-defined
// chunking: (D + 2S) * exp_new_nodes_cdc.
double add_strg_cdc(std::uint32_t height, std::uint64_t chunk_size,
                    std::uint64_t tag_size = kTagSize,
                    std::uint32_t window = kDefaultWindow,
                    std::uint64_t ref_size = kRefSize);

// Storage bound for replacing a delta-byte substring (delta >= 2): the
// two edge bytes cost one overwrite each, interior bytes are bounded by
// a fresh insert of delta - 2 bytes:
//   2 * add_strg + storage_full(delta - 2).
// Throws std::invalid_argument for delta < 2; use add_strg_* for
// delta = 1.
double delta_strg(Scheme scheme, std::uint32_t height, std::uint64_t delta,
                  std::uint64_t chunk_size,
                  std::uint64_t tag_size = kTagSize,
                  std::uint32_t window = kDefaultWindow,
                  std::uint64_t ref_size = kRefSize);

}  // namespace mlcs::model
