#pragma once

// Deterministic authenticated encryption (DAE) in an SIV-style
// composition with 32-byte tags and length-preserving ciphertexts:
//
//   tag        = HMAC-SHA-256(mac_key, plaintext)
//   ciphertext = AES-256-CTR(enc_key, iv = tag[0:16]) XOR plaintext
//
// The tag doubles as the chunk reference, so equal plaintexts map to
// equal (ciphertext, tag) pairs -- the equality leak that enables
// deduplication. Verification recomputes the tag over the decrypted
// candidate and compares in constant time.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

#include "mlcs/bytes.hpp"

namespace mlcs {

inline constexpr std::size_t kTagSize = 32;   // D: MAC tag bytes
inline constexpr std::size_t kRefSize = 32;   // R: chunk reference bytes, R = D
inline constexpr std::size_t kMasterKeySize = 64;

// Names (and authenticates) one stored chunk.
struct ChunkRef {
  std::array<std::uint8_t, kTagSize> bytes{};

  ByteView view() const {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
  }
  std::string hex() const { return to_hex(view()); }

  static ChunkRef from_view(ByteView raw);          // throws on size != 32
  static ChunkRef from_hex(std::string_view hex);   // throws on malformed input

  auto operator<=>(const ChunkRef&) const = default;
};

// Two independent 32-byte subkeys; never written to the backend.
struct MasterKey {
  std::array<std::uint8_t, 32> mac_key{};
  std::array<std::uint8_t, 32> enc_key{};

  // Fresh subkeys from the OS randomness source.
  static MasterKey generate();

  static MasterKey from_bytes(ByteView raw64);
  Bytes serialize() const;  // mac_key || enc_key

  // Key file holds exactly the 64 raw bytes, created with mode 0600.
  static MasterKey load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

// Arbitrary key length; 32-byte output.
Bytes hmac_sha256(ByteView key, ByteView data);

class Dae {
 public:
  explicit Dae(const MasterKey& key) : key_(key) {}

  // Deterministic: same (key, plaintext) -> same (ciphertext, ref).
  // |ciphertext| == |plaintext|; the ref is always 32 bytes.
  std::pair<Bytes, ChunkRef> enc_auth(ByteView plaintext) const;

  // Returns the plaintext iff the recomputed tag matches `ref`;
  // nullopt signals tampering or a wrong key.
  std::optional<Bytes> dec_vrfy(ByteView ciphertext, const ChunkRef& ref) const;

 private:
  ChunkRef tag_of(ByteView plaintext) const;
  Bytes apply_keystream(ByteView input, const ChunkRef& iv_source) const;

  MasterKey key_;
};

}  // namespace mlcs
