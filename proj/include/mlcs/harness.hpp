#pragma once

// Experiment harness: seeded random contents and edits, storage-delta
// measurements against fresh in-memory stores, and CSV emission. Every
// experiment is deterministic in its seed, including the generated
// master key, so runs are reproducible byte for byte.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "mlcs/core.hpp"

namespace mlcs::harness {

// Deterministic RNG with portable derived operations (the standard
// engine is bit-stable across platforms; distributions are not, so
// bounded sampling is done by multiply-shift here).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  std::uint64_t below(std::uint64_t bound);  // uniform in [0, bound)
  Bytes bytes(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

// Stable sub-seed derivation, so trials and experiment stages draw from
// independent streams regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path);

// Replaces a random delta-byte substring with a different random one
// (resampled until it differs). Length is preserved.
Bytes overwrite_random_substring(Rng& rng, ByteView content,
                                 std::uint64_t delta);

// Inserts one random byte at a random offset in [0, n].
Bytes insert_random_byte(Rng& rng, ByteView content);

struct SchemeSetup {
  Scheme scheme = Scheme::kContentDefined;
  HeightPolicy policy{};

  friend bool operator==(const SchemeSetup&, const SchemeSetup&) = default;
};

// Friendly names: wfc, sc, cdc, ml-sc, ml-cdc.
std::optional<SchemeSetup> parse_setup(std::string_view name);
std::string setup_label(const SchemeSetup& setup);

struct Row {
  std::string experiment;
  Scheme scheme = Scheme::kStatic;
  HeightPolicy policy{};
  std::uint64_t chunk_size = 0;  // S
  std::uint64_t n = 0;
  // delta bytes for edit experiments; version / snapshot index otherwise.
  std::uint64_t delta = 0;
  std::uint64_t trial = 0;
  std::uint64_t bytes_before = 0;
  std::uint64_t bytes_after = 0;
  std::uint64_t delta_bytes = 0;
  std::optional<double> model_bound;
};

extern const char* const kCsvHeader;
void write_csv(std::ostream& out, const std::vector<Row>& rows);

// Insert a random n-byte content, overwrite a random delta-byte
// substring, insert the result; one row per (setup, S, delta, trial).
std::vector<Row> run_delta(const std::vector<SchemeSetup>& setups,
                           const std::vector<std::uint64_t>& chunk_sizes,
                           std::uint64_t n,
                           const std::vector<std::uint64_t>& deltas,
                           std::uint32_t trials, std::uint64_t seed);

// Storage expansion of single fresh contents; one row per
// (setup, S, n, trial) with bytes_after = total storage.
std::vector<Row> run_expansion(const std::vector<SchemeSetup>& setups,
                               const std::vector<std::uint64_t>& chunk_sizes,
                               const std::vector<std::uint64_t>& sizes,
                               std::uint32_t trials, std::uint64_t seed);

// Second content differing in one overwritten / one inserted byte.
std::vector<Row> run_overwrite(const std::vector<SchemeSetup>& setups,
                               const std::vector<std::uint64_t>& chunk_sizes,
                               std::uint64_t n, std::uint32_t trials,
                               std::uint64_t seed);
std::vector<Row> run_insert(const std::vector<SchemeSetup>& setups,
                            const std::vector<std::uint64_t>& chunk_sizes,
                            std::uint64_t n, std::uint32_t trials,
                            std::uint64_t seed);

// Cumulative storage after each of `versions` single-byte-insert
// modifications; row delta = version index (0 = initial content).
std::vector<Row> run_versions(const std::vector<SchemeSetup>& setups,
                              const std::vector<std::uint64_t>& chunk_sizes,
                              std::uint64_t n, std::uint32_t versions,
                              std::uint32_t trials, std::uint64_t seed);

// Inserts every regular file of every first-level snapshot directory
// (both in lexicographic order); row delta = snapshot index, n = bytes
// inserted for that snapshot, bytes_after = cumulative storage.
std::vector<Row> run_corpus(const std::vector<SchemeSetup>& setups,
                            const std::vector<std::uint64_t>& chunk_sizes,
                            const std::filesystem::path& corpus_dir);

// Synthetic corpus: version_NNN/file.bin snapshots of one evolving file
// (successive single-byte inserts into an initially random content).
void generate_corpus(const std::filesystem::path& corpus_dir,
                     std::uint32_t versions, std::uint64_t size,
                     std::uint64_t seed);

}  // namespace mlcs::harness
