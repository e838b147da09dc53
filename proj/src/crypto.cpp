// Low-level SHA-256 calls keep per-node MAC cost allocation-free; the
// wrappers are verified against EVP HMAC and RFC test vectors in the
// unit tests.
#define OPENSSL_SUPPRESS_DEPRECATED

#include "mlcs/crypto.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>
#include <system_error>

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

namespace mlcs {

ChunkRef ChunkRef::from_view(ByteView raw) {
  if (raw.size() != kTagSize) {
    throw std::invalid_argument("chunk reference must be 32 bytes");
  }
  ChunkRef ref;
  std::memcpy(ref.bytes.data(), raw.data(), kTagSize);
  return ref;
}

ChunkRef ChunkRef::from_hex(std::string_view hex) {
  return from_view(mlcs::from_hex(hex));
}

MasterKey MasterKey::generate() {
  std::array<std::uint8_t, kMasterKeySize> raw;
  if (RAND_bytes(raw.data(), static_cast<int>(raw.size())) != 1) {
    throw std::runtime_error("randomness source failure");
  }
  return from_bytes({reinterpret_cast<const char*>(raw.data()), raw.size()});
}

MasterKey MasterKey::from_bytes(ByteView raw64) {
  if (raw64.size() != kMasterKeySize) {
    throw std::invalid_argument("master key material must be 64 bytes");
  }
  MasterKey key;
  std::memcpy(key.mac_key.data(), raw64.data(), 32);
  std::memcpy(key.enc_key.data(), raw64.data() + 32, 32);
  return key;
}

Bytes MasterKey::serialize() const {
  Bytes out;
  out.reserve(kMasterKeySize);
  out.append(reinterpret_cast<const char*>(mac_key.data()), mac_key.size());
  out.append(reinterpret_cast<const char*>(enc_key.data()), enc_key.size());
  return out;
}

MasterKey MasterKey::load(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) {
    throw std::system_error(errno, std::generic_category(),
                            "cannot open key file " + path.string());
  }
  std::array<char, kMasterKeySize + 1> buf;
  const ssize_t n = ::read(fd, buf.data(), buf.size());
  ::close(fd);
  if (n != static_cast<ssize_t>(kMasterKeySize)) {
    throw std::invalid_argument("key file must hold exactly 64 raw bytes: " +
                                path.string());
  }
  return from_bytes({buf.data(), kMasterKeySize});
}

void MasterKey::save(const std::filesystem::path& path) const {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
  if (fd < 0) {
    throw std::system_error(errno, std::generic_category(),
                            "cannot create key file " + path.string());
  }
  const Bytes raw = serialize();
  const ssize_t n = ::write(fd, raw.data(), raw.size());
  ::close(fd);
  if (n != static_cast<ssize_t>(raw.size())) {
    throw std::runtime_error("short write to key file " + path.string());
  }
}

Bytes hmac_sha256(ByteView key, ByteView data) {
  unsigned char block[SHA256_CBLOCK] = {0};
  if (key.size() > SHA256_CBLOCK) {
    SHA256(reinterpret_cast<const unsigned char*>(key.data()), key.size(),
           block);
  } else {
    std::memcpy(block, key.data(), key.size());
  }

  unsigned char pad[SHA256_CBLOCK];
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256_CTX ctx;

  for (std::size_t i = 0; i < SHA256_CBLOCK; ++i) pad[i] = block[i] ^ 0x36;
  SHA256_Init(&ctx);
  SHA256_Update(&ctx, pad, sizeof(pad));
  SHA256_Update(&ctx, data.data(), data.size());
  SHA256_Final(digest, &ctx);

  for (std::size_t i = 0; i < SHA256_CBLOCK; ++i) pad[i] = block[i] ^ 0x5C;
  SHA256_Init(&ctx);
  SHA256_Update(&ctx, pad, sizeof(pad));
  SHA256_Update(&ctx, digest, sizeof(digest));
  SHA256_Final(digest, &ctx);

  OPENSSL_cleanse(block, sizeof(block));
  OPENSSL_cleanse(pad, sizeof(pad));
  return {reinterpret_cast<const char*>(digest), sizeof(digest)};
}

namespace {

const EVP_CIPHER* aes256ctr() {
  static const EVP_CIPHER* cipher =
      EVP_CIPHER_fetch(nullptr, "AES-256-CTR", nullptr);
  if (cipher == nullptr) {
    throw std::runtime_error("AES-256-CTR unavailable");
  }
  return cipher;
}

}  // namespace

ChunkRef Dae::tag_of(ByteView plaintext) const {
  const Bytes mac = hmac_sha256(
      {reinterpret_cast<const char*>(key_.mac_key.data()), key_.mac_key.size()},
      plaintext);
  return ChunkRef::from_view(mac);
}

Bytes Dae::apply_keystream(ByteView input, const ChunkRef& iv_source) const {
  Bytes out;
  out.resize(input.size());
  if (input.empty()) return out;

  unsigned char iv[16];
  std::memcpy(iv, iv_source.bytes.data(), sizeof(iv));

  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("cipher context allocation");
  int len = 0;
  const bool ok =
      EVP_EncryptInit_ex(ctx, aes256ctr(), nullptr, key_.enc_key.data(), iv) ==
          1 &&
      EVP_EncryptUpdate(ctx, reinterpret_cast<unsigned char*>(out.data()),
                        &len,
                        reinterpret_cast<const unsigned char*>(input.data()),
                        static_cast<int>(input.size())) == 1 &&
      len == static_cast<int>(input.size());
  EVP_CIPHER_CTX_free(ctx);
  if (!ok) throw std::runtime_error("keystream generation failed");
  return out;
}

std::pair<Bytes, ChunkRef> Dae::enc_auth(ByteView plaintext) const {
  ChunkRef ref = tag_of(plaintext);
  return {apply_keystream(plaintext, ref), ref};
}

std::optional<Bytes> Dae::dec_vrfy(ByteView ciphertext,
                                   const ChunkRef& ref) const {
  Bytes candidate = apply_keystream(ciphertext, ref);
  const ChunkRef expected = tag_of(candidate);
  if (CRYPTO_memcmp(expected.bytes.data(), ref.bytes.data(), kTagSize) != 0) {
    return std::nullopt;
  }
  return candidate;
}

}  // namespace mlcs
