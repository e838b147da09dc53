#pragma once

// The content store: splits a content into a tree of chunks, encrypts
// and authenticates every node, and persists nodes in a key-value
// backend under their 32-byte tags.
//
// Leaves hold raw content bytes; an inner node ("superchunk") holds the
// concatenated 32-byte references of its children, so the persisted
// structure is a Merkle-tree-like DAG of MAC values and identical
// subtrees of different contents share storage. A content is addressed
// by (root reference, tree height); child heights are implied by the
// parent's, so node representations carry no type byte.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mlcs/chunking.hpp"
#include "mlcs/crypto.hpp"
#include "mlcs/kvs.hpp"

namespace mlcs {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A referenced chunk is not in the backend.
struct MissingChunkError : StoreError {
  using StoreError::StoreError;
};
// A fetched node failed tag verification: tampering or wrong key.
struct AuthenticityError : StoreError {
  using StoreError::StoreError;
};
// A verified inner node's plaintext is not a whole number of references.
struct MalformedNodeError : StoreError {
  using StoreError::StoreError;
};
struct ConfigError : StoreError {
  using StoreError::StoreError;
};

// Chooses the chunk-tree height for a content. Automatic picks the
// smallest height whose tree capacity covers the content length;
// Fixed(0) stores one whole-content leaf (whole-file chunking) and
// Fixed(1) is plain single-level chunking.
struct HeightPolicy {
  std::optional<std::uint32_t> fixed;

  static HeightPolicy automatic() { return {}; }
  static HeightPolicy fixed_height(std::uint32_t h) { return {h}; }
  bool is_auto() const { return !fixed.has_value(); }

  friend bool operator==(const HeightPolicy&, const HeightPolicy&) = default;
};

std::string to_string(const HeightPolicy& policy);  // "auto" / "0" / "1" ...
std::optional<HeightPolicy> parse_height_policy(std::string_view text);

inline constexpr std::uint32_t kMaxTreeHeight = 255;

// Smallest height h such that n <= S^(h+1) / R^h (0 for n <= S, and for
// n = 0). Evaluated in exact integer arithmetic. Throws ConfigError
// unless chunk_size > ref_size.
std::uint32_t tree_height(std::uint64_t n, std::uint64_t chunk_size,
                          std::uint64_t ref_size = kRefSize);

// Target chunk length used when chunking a node at height level >= 1:
// round(S^level / R^(level-1)), at least 1. Level 0 nodes are leaves and
// are never chunked; passing 0 throws ConfigError.
std::uint64_t level_target(std::uint32_t level, std::uint64_t chunk_size,
                           std::uint64_t ref_size = kRefSize);

struct StoreConfig {
  Scheme scheme = Scheme::kContentDefined;
  std::uint64_t chunk_size = 4096;  // S; requires S >= 2R
  std::uint32_t window = kDefaultWindow;
  // Leaf-level bounds; scaled proportionally at higher levels.
  std::optional<std::uint64_t> min_chunk;
  std::optional<std::uint64_t> max_chunk;
  HeightPolicy height_policy{};
  bool refcounting = false;

  void validate() const;  // throws ConfigError
  ChunkerSpec chunker_for_level(std::uint32_t level) const;

  friend bool operator==(const StoreConfig&, const StoreConfig&) = default;
};

// Handle returned by put_content: root reference plus tree height.
// Wire form is 33 bytes (ref || height); text form <64 hex>:<height>.
struct ContentKey {
  ChunkRef root;
  std::uint32_t height = 0;

  Bytes serialize() const;
  static ContentKey deserialize(ByteView raw33);
  std::string to_string() const;
  static ContentKey parse(std::string_view text);

  friend bool operator==(const ContentKey&, const ContentKey&) = default;
};

struct LevelStats {
  std::uint32_t height = 0;
  std::uint64_t node_count = 0;
  std::uint64_t value_bytes = 0;   // sum of persisted value sizes
  std::uint64_t stored_bytes = 0;  // sum of (tag + value) sizes
};

struct NodeInfo {
  ChunkRef ref;
  std::uint32_t height = 0;
  std::uint64_t offset = 0;  // first represented content byte
  std::uint64_t length = 0;  // represented content length
  std::uint64_t value_size = 0;
};

// Node counts are tree positions: a chunk appearing twice in one tree
// is stored once but counted per position.
struct TreeStats {
  std::vector<LevelStats> levels;  // index == height, root last
  std::vector<NodeInfo> nodes;     // filled only when requested
  std::uint64_t content_length = 0;

  std::uint64_t total_nodes() const;
  std::uint64_t total_stored_bytes() const;
};

class ContentStore {
 public:
  // Immutable store: contents can be inserted and retrieved.
  ContentStore(Kvs& backend, const MasterKey& key, StoreConfig config);
  // Refcounted store: additionally supports delete_content.
  ContentStore(RefcountKvs& backend, const MasterKey& key, StoreConfig config);

  // Persists every tree node; re-inserting an identical content changes
  // nothing and returns the identical key. In refcounted mode every
  // reference acquired by the new tree is counted.
  ContentKey put_content(ByteView content);

  // Returns exactly the content inserted under `key`. Every fetched node
  // is verified before use; throws MissingChunkError, AuthenticityError
  // or MalformedNodeError otherwise.
  Bytes get_content(const ContentKey& key) const;

  // Refcounted mode only: decrements counts along the tree and removes
  // chunks reaching zero; chunks shared with other contents survive.
  // Throws KvsError on an unknown key or a double delete.
  void delete_content(const ContentKey& key);

  // Per-level node counts and sizes of the stored tree; with
  // collect_nodes, per-node spans as well.
  TreeStats describe_tree(const ContentKey& key,
                          bool collect_nodes = false) const;

  // Height the configured policy assigns to an n-byte content.
  std::uint32_t height_for(std::uint64_t n) const;

  const StoreConfig& config() const { return config_; }
  Kvs& backend() { return kvs_; }

 private:
  ChunkRef put_chunk(ByteView content, std::uint32_t height);
  void collect(const ChunkRef& ref, std::uint32_t height, Bytes& out) const;
  void release(const ChunkRef& ref, std::uint32_t height);
  Bytes fetch_verified(const ChunkRef& ref) const;
  std::uint64_t describe(const ChunkRef& ref, std::uint32_t height,
                         std::uint64_t offset, TreeStats& stats,
                         bool collect_nodes) const;

  Kvs& kvs_;
  RefcountKvs* refs_ = nullptr;
  Dae dae_;
  StoreConfig config_;
};

// ---------------------------------------------------------------------------
// Directory stores: a store rooted at one directory, with a manifest
// recording the parameters that define on-disk compatibility. Opening
// fails if the manifest disagrees with expected parameters or with the
// compiled-in constants.

inline constexpr std::uint32_t kManifestFormatVersion = 1;

void write_manifest(const std::filesystem::path& store_dir,
                    const StoreConfig& config);
StoreConfig read_manifest(const std::filesystem::path& store_dir);

struct DirStore {
  std::unique_ptr<DirKvs> kvs;
  std::unique_ptr<RefcountKvs> refs;  // present when config.refcounting
  std::unique_ptr<ContentStore> store;
  StoreConfig config;

  void flush();  // persists refcount sidecar, if any
};

DirStore create_dir_store(const std::filesystem::path& dir,
                          const MasterKey& key, const StoreConfig& config);
DirStore open_dir_store(const std::filesystem::path& dir, const MasterKey& key,
                        const std::optional<StoreConfig>& expected = {});

}  // namespace mlcs
