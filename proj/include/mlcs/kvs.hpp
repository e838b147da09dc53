#pragma once

// Put/Get key-value persistence with byte-exact storage accounting.
// Backends are dumb storage: last write wins, values are opaque.
// Concurrent get is safe; put/erase/refcount mutations must be
// serialized by the caller.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

#include "mlcs/bytes.hpp"

namespace mlcs {

struct KvsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StorageReport {
  std::uint64_t element_count = 0;
  std::uint64_t total_bytes = 0;  // sum over elements of |key| + |value|

  friend bool operator==(const StorageReport&, const StorageReport&) = default;
};

class Kvs {
 public:
  virtual ~Kvs() = default;

  // Idempotent in accounting: re-putting an identical pair changes nothing;
  // a different value under an existing key overwrites.
  virtual void put(ByteView key, ByteView value) = 0;
  virtual std::optional<Bytes> get(ByteView key) const = 0;
  virtual bool exists(ByteView key) const = 0;
  virtual bool erase(ByteView key) = 0;
  virtual StorageReport report() const = 0;

  // Visits every element; the callback must not mutate the store.
  virtual void for_each(
      const std::function<void(ByteView key, ByteView value)>& fn) const = 0;
};

class MemoryKvs final : public Kvs {
 public:
  void put(ByteView key, ByteView value) override;
  std::optional<Bytes> get(ByteView key) const override;
  bool exists(ByteView key) const override;
  bool erase(ByteView key) override;
  StorageReport report() const override;
  void for_each(const std::function<void(ByteView, ByteView)>& fn) const override;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<Bytes, Bytes> map_;
  StorageReport report_;
};

// One file per element under a two-level hex fan-out of the key:
//   <root>/objects/<hex[0:2]>/<hex[2:4]>/<hex>, value stored verbatim.
// Keys must be at least 2 bytes. Writes go through a temp file + rename.
class DirKvs final : public Kvs {
 public:
  explicit DirKvs(std::filesystem::path root);  // scans existing elements

  void put(ByteView key, ByteView value) override;
  std::optional<Bytes> get(ByteView key) const override;
  bool exists(ByteView key) const override;
  bool erase(ByteView key) override;
  StorageReport report() const override;
  void for_each(const std::function<void(ByteView, ByteView)>& fn) const override;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path path_for(ByteView key) const;

  std::filesystem::path root_;
  std::filesystem::path objects_;
  mutable std::shared_mutex mutex_;  // guards counters only
  StorageReport report_;
  std::uint64_t tmp_counter_ = 0;
};

// Reference counting on top of any backend; decrementing a count to zero
// removes the element. Counts live out of band (optionally persisted to a
// sidecar file, newline-delimited "hexkey<TAB>count", rewritten atomically)
// so ciphertext values stay length-preserving. report() excludes the
// sidecar by default to keep accounting comparable to an immutable store.
class RefcountKvs final : public Kvs {
 public:
  explicit RefcountKvs(Kvs& inner,
                       std::optional<std::filesystem::path> sidecar = {},
                       bool count_sidecar_in_report = false);
  ~RefcountKvs() override;

  std::uint64_t incr(ByteView key);
  // Throws KvsError when the count is already zero/absent.
  std::uint64_t decr(ByteView key);
  std::uint64_t count(ByteView key) const;

  void flush();  // rewrite the sidecar (no-op without one)
  std::uint64_t sidecar_bytes() const;

  void put(ByteView key, ByteView value) override;
  std::optional<Bytes> get(ByteView key) const override;
  bool exists(ByteView key) const override;
  bool erase(ByteView key) override;  // raw passthrough, counts untouched
  StorageReport report() const override;
  void for_each(const std::function<void(ByteView, ByteView)>& fn) const override;

 private:
  Kvs& inner_;
  std::optional<std::filesystem::path> sidecar_;
  bool count_sidecar_in_report_;
  std::map<Bytes, std::uint64_t> counts_;  // ordered for a stable sidecar
  bool dirty_ = false;
};

// Adversarial full read/write access to the backend, for tamper tests.
class TamperKvs final : public Kvs {
 public:
  explicit TamperKvs(Kvs& inner) : inner_(inner) {}

  void flip_byte(ByteView key, std::size_t index, std::uint8_t mask = 0xFF);
  void truncate_tail(ByteView key, std::size_t count = 1);
  void replace_value(ByteView key, ByteView value);
  void remove(ByteView key);
  void swap_values(ByteView key_a, ByteView key_b);

  void put(ByteView key, ByteView value) override { inner_.put(key, value); }
  std::optional<Bytes> get(ByteView key) const override {
    return inner_.get(key);
  }
  bool exists(ByteView key) const override { return inner_.exists(key); }
  bool erase(ByteView key) override { return inner_.erase(key); }
  StorageReport report() const override { return inner_.report(); }
  void for_each(const std::function<void(ByteView, ByteView)>& fn) const override {
    inner_.for_each(fn);
  }

 private:
  Bytes fetch(ByteView key) const;  // throws KvsError on absent key

  Kvs& inner_;
};

}  // namespace mlcs
