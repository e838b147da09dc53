#include "mlcs/core.hpp"

#include <charconv>
#include <fstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace mlcs {

namespace fs = std::filesystem;
using boost::multiprecision::cpp_int;

std::string to_string(const HeightPolicy& policy) {
  return policy.is_auto() ? "auto" : std::to_string(*policy.fixed);
}

std::optional<HeightPolicy> parse_height_policy(std::string_view text) {
  if (text == "auto") return HeightPolicy::automatic();
  std::uint32_t h = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), h);
  if (ec != std::errc{} || ptr != text.data() + text.size() ||
      h > kMaxTreeHeight) {
    return std::nullopt;
  }
  return HeightPolicy::fixed_height(h);
}

std::uint32_t tree_height(std::uint64_t n, std::uint64_t chunk_size,
                          std::uint64_t ref_size) {
  if (chunk_size <= ref_size) {
    throw ConfigError("chunk size must exceed reference size");
  }
  // Capacity of a height-h tree is S^(h+1)/R^h; grow h until it covers n.
  std::uint32_t height = 0;
  cpp_int cap_num = chunk_size;
  cpp_int cap_den = 1;
  while (cpp_int(n) * cap_den > cap_num) {
    height += 1;
    cap_num *= chunk_size;
    cap_den *= ref_size;
    if (height > kMaxTreeHeight) {
      throw ConfigError("tree height exceeds limit");
    }
  }
  return height;
}

std::uint64_t level_target(std::uint32_t level, std::uint64_t chunk_size,
                           std::uint64_t ref_size) {
  if (level == 0) {
    throw ConfigError("leaves are not chunked; level must be >= 1");
  }
  if (chunk_size <= ref_size) {
    throw ConfigError("chunk size must exceed reference size");
  }
  cpp_int num = chunk_size;
  cpp_int den = 1;
  for (std::uint32_t i = 1; i < level; ++i) {
    num *= chunk_size;
    den *= ref_size;
  }
  const cpp_int rounded = (2 * num + den) / (2 * den);  // round half up
  if (rounded > std::numeric_limits<std::uint64_t>::max()) {
    throw ConfigError("level target overflows 64 bits");
  }
  const auto target = static_cast<std::uint64_t>(rounded);
  return target > 0 ? target : 1;
}

void StoreConfig::validate() const {
  if (chunk_size < 2 * kRefSize) {
    throw ConfigError("chunk size must be at least twice the reference size");
  }
  if (height_policy.fixed && *height_policy.fixed > kMaxTreeHeight) {
    throw ConfigError("fixed height exceeds limit");
  }
  chunker_for_level(1).validate();
}

ChunkerSpec StoreConfig::chunker_for_level(std::uint32_t level) const {
  const std::uint64_t target = level_target(level, chunk_size, kRefSize);
  ChunkerSpec spec;
  spec.scheme = scheme;
  spec.target_length = target;
  spec.window = window;
  // min/max are stated relative to the leaf target; scale them with the
  // level target so every level keeps the same shape constraints.
  const auto scale = [&](std::uint64_t bound) {
    const cpp_int scaled =
        (2 * cpp_int(bound) * target + chunk_size) / (2 * cpp_int(chunk_size));
    return scaled > 0 ? static_cast<std::uint64_t>(scaled) : std::uint64_t{1};
  };
  if (scheme == Scheme::kContentDefined) {
    if (min_chunk) spec.min_length = scale(*min_chunk);
    if (max_chunk) spec.max_length = scale(*max_chunk);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// ContentKey

Bytes ContentKey::serialize() const {
  if (height > kMaxTreeHeight) throw ConfigError("content key height > 255");
  Bytes out(root.view());
  out.push_back(static_cast<char>(height));
  return out;
}

ContentKey ContentKey::deserialize(ByteView raw33) {
  if (raw33.size() != kRefSize + 1) {
    throw ConfigError("content key wire form must be 33 bytes");
  }
  ContentKey key;
  key.root = ChunkRef::from_view(raw33.substr(0, kRefSize));
  key.height = static_cast<std::uint8_t>(raw33[kRefSize]);
  return key;
}

std::string ContentKey::to_string() const {
  return root.hex() + ":" + std::to_string(height);
}

ContentKey ContentKey::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("content key must look like <64 hex>:<height>");
  }
  ContentKey key;
  key.root = ChunkRef::from_hex(text.substr(0, colon));
  const auto height_text = text.substr(colon + 1);
  std::uint32_t h = 0;
  const auto [ptr, ec] =
      std::from_chars(height_text.data(),
                      height_text.data() + height_text.size(), h);
  if (ec != std::errc{} || ptr != height_text.data() + height_text.size() ||
      h > kMaxTreeHeight) {
    throw ConfigError("invalid content key height");
  }
  key.height = h;
  return key;
}

// ---------------------------------------------------------------------------
// TreeStats

std::uint64_t TreeStats::total_nodes() const {
  std::uint64_t total = 0;
  for (const auto& level : levels) total += level.node_count;
  return total;
}

std::uint64_t TreeStats::total_stored_bytes() const {
  std::uint64_t total = 0;
  for (const auto& level : levels) total += level.stored_bytes;
  return total;
}

// ---------------------------------------------------------------------------
// ContentStore

ContentStore::ContentStore(Kvs& backend, const MasterKey& key,
                           StoreConfig config)
    : kvs_(backend), dae_(key), config_(std::move(config)) {
  config_.validate();
}

ContentStore::ContentStore(RefcountKvs& backend, const MasterKey& key,
                           StoreConfig config)
    : kvs_(backend), refs_(&backend), dae_(key), config_(std::move(config)) {
  config_.validate();
}

std::uint32_t ContentStore::height_for(std::uint64_t n) const {
  if (config_.height_policy.fixed) return *config_.height_policy.fixed;
  return tree_height(n, config_.chunk_size, kRefSize);
}

ContentKey ContentStore::put_content(ByteView content) {
  const std::uint32_t height = height_for(content.size());
  return {put_chunk(content, height), height};
}

ChunkRef ContentStore::put_chunk(ByteView content, std::uint32_t height) {
  if (height == 0) {
    auto [cipher, ref] = dae_.enc_auth(content);
    kvs_.put(ref.view(), cipher);
    if (refs_) refs_->incr(ref.view());
    return ref;
  }

  std::vector<ChunkRef> children;
  for (ByteView piece : split(config_.chunker_for_level(height), content)) {
    children.push_back(put_chunk(piece, height - 1));
  }
  Bytes child_refs;
  child_refs.reserve(children.size() * kRefSize);
  for (const ChunkRef& child : children) child_refs.append(child.view());

  auto [cipher, ref] = dae_.enc_auth(child_refs);
  if (!kvs_.exists(ref.view())) {
    kvs_.put(ref.view(), cipher);
  } else if (refs_) {
    // Deduplicated: the stored node already owns its child references,
    // so give back the ones this walk just acquired.
    for (const ChunkRef& child : children) release(child, height - 1);
  }
  if (refs_) refs_->incr(ref.view());
  return ref;
}

Bytes ContentStore::fetch_verified(const ChunkRef& ref) const {
  auto cipher = kvs_.get(ref.view());
  if (!cipher) throw MissingChunkError("missing chunk " + ref.hex());
  auto plain = dae_.dec_vrfy(*cipher, ref);
  if (!plain) throw AuthenticityError("verification failed for " + ref.hex());
  return *std::move(plain);
}

Bytes ContentStore::get_content(const ContentKey& key) const {
  Bytes out;
  collect(key.root, key.height, out);
  return out;
}

void ContentStore::collect(const ChunkRef& ref, std::uint32_t height,
                           Bytes& out) const {
  const Bytes plain = fetch_verified(ref);
  if (height == 0) {
    out.append(plain);
    return;
  }
  if (plain.size() % kRefSize != 0) {
    throw MalformedNodeError("superchunk " + ref.hex() +
                             " is not a whole number of references");
  }
  for (std::size_t pos = 0; pos < plain.size(); pos += kRefSize) {
    collect(ChunkRef::from_view(ByteView(plain).substr(pos, kRefSize)),
            height - 1, out);
  }
}

void ContentStore::delete_content(const ContentKey& key) {
  if (!refs_) {
    throw ConfigError("delete_content requires a refcounted store");
  }
  if (refs_->count(key.root.view()) == 0) {
    throw KvsError("unknown or already deleted content key " +
                   key.to_string());
  }
  release(key.root, key.height);
}

void ContentStore::release(const ChunkRef& ref, std::uint32_t height) {
  if (refs_->count(ref.view()) != 1) {
    refs_->decr(ref.view());
    return;
  }
  // Last reference: the element goes away, so walk into children first.
  if (height == 0) {
    refs_->decr(ref.view());
    return;
  }
  const Bytes plain = fetch_verified(ref);
  if (plain.size() % kRefSize != 0) {
    throw MalformedNodeError("superchunk " + ref.hex() +
                             " is not a whole number of references");
  }
  refs_->decr(ref.view());
  for (std::size_t pos = 0; pos < plain.size(); pos += kRefSize) {
    release(ChunkRef::from_view(ByteView(plain).substr(pos, kRefSize)),
            height - 1);
  }
}

TreeStats ContentStore::describe_tree(const ContentKey& key,
                                      bool collect_nodes) const {
  TreeStats stats;
  stats.levels.resize(key.height + 1);
  for (std::uint32_t h = 0; h <= key.height; ++h) stats.levels[h].height = h;
  stats.content_length = describe(key.root, key.height, 0, stats, collect_nodes);
  return stats;
}

std::uint64_t ContentStore::describe(const ChunkRef& ref, std::uint32_t height,
                                     std::uint64_t offset, TreeStats& stats,
                                     bool collect_nodes) const {
  const Bytes plain = fetch_verified(ref);
  std::uint64_t length = 0;
  if (height == 0) {
    length = plain.size();
  } else {
    if (plain.size() % kRefSize != 0) {
      throw MalformedNodeError("superchunk " + ref.hex() +
                               " is not a whole number of references");
    }
    for (std::size_t pos = 0; pos < plain.size(); pos += kRefSize) {
      length += describe(
          ChunkRef::from_view(ByteView(plain).substr(pos, kRefSize)),
          height - 1, offset + length, stats, collect_nodes);
    }
  }
  LevelStats& level = stats.levels[height];
  level.node_count += 1;
  level.value_bytes += plain.size();
  level.stored_bytes += kTagSize + plain.size();
  if (collect_nodes) {
    stats.nodes.push_back({ref, height, offset, length, plain.size()});
  }
  return length;
}

// ---------------------------------------------------------------------------
// Manifest and directory stores

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kSidecarName = "refcounts.tsv";

std::string multiplier_hex() {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx",
                static_cast<unsigned long long>(kRollingHashMultiplier));
  return buf;
}

}  // namespace

void write_manifest(const fs::path& store_dir, const StoreConfig& config) {
  config.validate();
  nlohmann::json j;
  j["format_version"] = kManifestFormatVersion;
  j["scheme"] = std::string(to_string(config.scheme));
  j["chunk_size"] = config.chunk_size;
  j["ref_size"] = kRefSize;
  j["tag_size"] = kTagSize;
  j["window"] = config.window;
  j["min_chunk"] =
      config.min_chunk ? nlohmann::json(*config.min_chunk) : nlohmann::json();
  j["max_chunk"] =
      config.max_chunk ? nlohmann::json(*config.max_chunk) : nlohmann::json();
  j["height_policy"] = to_string(config.height_policy);
  j["refcounting"] = config.refcounting;
  j["rolling_hash_multiplier"] = multiplier_hex();
  j["cut_rule"] = "hash % target == target - 1; cut ends the left chunk";

  std::ofstream out(store_dir / kManifestName, std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot write manifest in " + store_dir.string());
  }
  out << j.dump(2) << '\n';
}

StoreConfig read_manifest(const fs::path& store_dir) {
  std::ifstream in(store_dir / kManifestName);
  if (!in) {
    throw ConfigError("no manifest in " + store_dir.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed manifest: " + std::string(e.what()));
  }

  if (j.value("format_version", 0u) != kManifestFormatVersion) {
    throw ConfigError("unsupported manifest format version");
  }
  if (j.value("ref_size", 0u) != kRefSize ||
      j.value("tag_size", 0u) != kTagSize ||
      j.value("rolling_hash_multiplier", "") != multiplier_hex()) {
    throw ConfigError("store constants differ from this build");
  }

  StoreConfig config;
  const auto scheme = parse_scheme(j.value("scheme", ""));
  if (!scheme) throw ConfigError("manifest has unknown scheme");
  config.scheme = *scheme;
  config.chunk_size = j.value("chunk_size", 0u);
  config.window = j.value("window", kDefaultWindow);
  if (j.contains("min_chunk") && !j["min_chunk"].is_null()) {
    config.min_chunk = j["min_chunk"].get<std::uint64_t>();
  }
  if (j.contains("max_chunk") && !j["max_chunk"].is_null()) {
    config.max_chunk = j["max_chunk"].get<std::uint64_t>();
  }
  const auto policy =
      parse_height_policy(j.value("height_policy", std::string()));
  if (!policy) throw ConfigError("manifest has unknown height policy");
  config.height_policy = *policy;
  config.refcounting = j.value("refcounting", false);
  config.validate();
  return config;
}

void DirStore::flush() {
  if (refs) refs->flush();
}

namespace {

DirStore assemble(const fs::path& dir, const MasterKey& key,
                  const StoreConfig& config) {
  DirStore result;
  result.config = config;
  result.kvs = std::make_unique<DirKvs>(dir);
  if (config.refcounting) {
    result.refs = std::make_unique<RefcountKvs>(*result.kvs, dir / kSidecarName);
    result.store = std::make_unique<ContentStore>(*result.refs, key, config);
  } else {
    result.store = std::make_unique<ContentStore>(*result.kvs, key, config);
  }
  return result;
}

}  // namespace

DirStore create_dir_store(const fs::path& dir, const MasterKey& key,
                          const StoreConfig& config) {
  config.validate();
  fs::create_directories(dir);
  if (fs::exists(dir / kManifestName)) {
    throw ConfigError("store already initialized: " + dir.string());
  }
  write_manifest(dir, config);
  return assemble(dir, key, config);
}

DirStore open_dir_store(const fs::path& dir, const MasterKey& key,
                        const std::optional<StoreConfig>& expected) {
  const StoreConfig config = read_manifest(dir);
  if (expected && !(config == *expected)) {
    throw ConfigError("store parameters in " + dir.string() +
                      " do not match the requested configuration");
  }
  return assemble(dir, key, config);
}

}  // namespace mlcs
