#include "mlcs/harness.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "mlcs/model.hpp"

namespace mlcs::harness {

namespace fs = std::filesystem;

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next()) * bound) >> 64);
}

Bytes Rng::bytes(std::size_t n) {
  Bytes out;
  out.resize(n);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const std::uint64_t word = next();
    for (std::size_t j = 0; j < 8; ++j) {
      out[i + j] = static_cast<char>((word >> (8 * j)) & 0xFF);
    }
  }
  if (i < n) {
    const std::uint64_t word = next();
    for (std::size_t j = 0; i + j < n; ++j) {
      out[i + j] = static_cast<char>((word >> (8 * j)) & 0xFF);
    }
  }
  return out;
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed,
                          std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix(seed);
  for (std::uint64_t p : path) s = splitmix(s ^ p);
  return s;
}

Bytes overwrite_random_substring(Rng& rng, ByteView content,
                                 std::uint64_t delta) {
  if (delta == 0 || delta > content.size()) {
    throw std::invalid_argument("substring length out of range");
  }
  const std::uint64_t pos = rng.below(content.size() - delta + 1);
  Bytes edited(content);
  for (;;) {
    const Bytes replacement = rng.bytes(delta);
    if (ByteView(replacement) != content.substr(pos, delta)) {
      edited.replace(pos, delta, replacement);
      return edited;
    }
  }
}

Bytes insert_random_byte(Rng& rng, ByteView content) {
  const std::uint64_t pos = rng.below(content.size() + 1);
  Bytes edited(content);
  edited.insert(edited.begin() + static_cast<std::ptrdiff_t>(pos),
                static_cast<char>(rng.next() & 0xFF));
  return edited;
}

std::optional<SchemeSetup> parse_setup(std::string_view name) {
  if (name == "wfc") return SchemeSetup{Scheme::kStatic, HeightPolicy::fixed_height(0)};
  if (name == "sc") return SchemeSetup{Scheme::kStatic, HeightPolicy::fixed_height(1)};
  if (name == "cdc") return SchemeSetup{Scheme::kContentDefined, HeightPolicy::fixed_height(1)};
  if (name == "ml-sc") return SchemeSetup{Scheme::kStatic, HeightPolicy::automatic()};
  if (name == "ml-cdc") return SchemeSetup{Scheme::kContentDefined, HeightPolicy::automatic()};
  return std::nullopt;
}

std::string setup_label(const SchemeSetup& setup) {
  if (setup.policy == HeightPolicy::fixed_height(0)) return "wfc";
  const std::string base(to_string(setup.scheme));
  if (setup.policy == HeightPolicy::fixed_height(1)) return base;
  if (setup.policy.is_auto()) return "ml-" + base;
  return base + "/h=" + to_string(setup.policy);
}

const char* const kCsvHeader =
    "experiment,scheme,height_policy,S,n,delta,trial,bytes_before,"
    "bytes_after,delta_bytes,model_bound";

void write_csv(std::ostream& out, const std::vector<Row>& rows) {
  out << kCsvHeader << '\n';
  char bound[64];
  for (const Row& row : rows) {
    bound[0] = '\0';
    if (row.model_bound) {
      std::snprintf(bound, sizeof(bound), "%.3f", *row.model_bound);
    }
    out << row.experiment << ',' << to_string(row.scheme) << ','
        << to_string(row.policy) << ',' << row.chunk_size << ',' << row.n
        << ',' << row.delta << ',' << row.trial << ',' << row.bytes_before
        << ',' << row.bytes_after << ',' << row.delta_bytes << ',' << bound
        << '\n';
  }
}

namespace {

MasterKey key_for(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x6B6579}));  // "key"
  return MasterKey::from_bytes(rng.bytes(kMasterKeySize));
}

StoreConfig config_for(const SchemeSetup& setup, std::uint64_t chunk_size) {
  StoreConfig config;
  config.scheme = setup.scheme;
  config.chunk_size = chunk_size;
  config.height_policy = setup.policy;
  return config;
}

// Bounds apply to the automatic height policy, where the tree geometry
// matches the model's assumptions.
std::optional<double> overwrite_bound(const SchemeSetup& setup,
                                      std::uint64_t chunk_size,
                                      std::uint64_t n) {
  if (!setup.policy.is_auto()) return std::nullopt;
  const std::uint32_t h = tree_height(n, chunk_size);
  if (setup.scheme == Scheme::kStatic) {
    return model::add_strg_sc(h, chunk_size);
  }
  return model::add_strg_cdc(h, chunk_size);
}

std::optional<double> delta_bound(const SchemeSetup& setup,
                                  std::uint64_t chunk_size, std::uint64_t n,
                                  std::uint64_t delta) {
  if (!setup.policy.is_auto()) return std::nullopt;
  if (delta < 2) return overwrite_bound(setup, chunk_size, n);
  const std::uint32_t h = tree_height(n, chunk_size);
  return model::delta_strg(setup.scheme, h, delta, chunk_size);
}

struct Measurement {
  std::uint64_t before = 0;
  std::uint64_t after = 0;
};

// Fresh store per call; reports storage before and after inserting the
// second content (when present).
Measurement measure_pair(const SchemeSetup& setup, std::uint64_t chunk_size,
                         const MasterKey& key, ByteView first,
                         const std::optional<Bytes>& second) {
  MemoryKvs kvs;
  ContentStore store(kvs, key, config_for(setup, chunk_size));
  store.put_content(first);
  Measurement m;
  m.before = kvs.report().total_bytes;
  if (second) store.put_content(*second);
  m.after = kvs.report().total_bytes;
  return m;
}

}  // namespace

std::vector<Row> run_delta(const std::vector<SchemeSetup>& setups,
                           const std::vector<std::uint64_t>& chunk_sizes,
                           std::uint64_t n,
                           const std::vector<std::uint64_t>& deltas,
                           std::uint32_t trials, std::uint64_t seed) {
  const MasterKey key = key_for(seed);
  std::vector<Row> rows;
  for (const SchemeSetup& setup : setups) {
    for (std::uint64_t chunk_size : chunk_sizes) {
      for (std::uint64_t delta : deltas) {
        for (std::uint32_t trial = 0; trial < trials; ++trial) {
          Rng content_rng(derive_seed(seed, {1, n, trial}));
          const Bytes content = content_rng.bytes(n);
          Rng edit_rng(derive_seed(seed, {2, n, delta, trial}));
          const Bytes edited =
              overwrite_random_substring(edit_rng, content, delta);
          const Measurement m =
              measure_pair(setup, chunk_size, key, content, edited);
          rows.push_back({"delta", setup.scheme, setup.policy, chunk_size, n,
                          delta, trial, m.before, m.after, m.after - m.before,
                          delta_bound(setup, chunk_size, n, delta)});
        }
      }
    }
  }
  return rows;
}

std::vector<Row> run_expansion(const std::vector<SchemeSetup>& setups,
                               const std::vector<std::uint64_t>& chunk_sizes,
                               const std::vector<std::uint64_t>& sizes,
                               std::uint32_t trials, std::uint64_t seed) {
  const MasterKey key = key_for(seed);
  std::vector<Row> rows;
  for (const SchemeSetup& setup : setups) {
    for (std::uint64_t chunk_size : chunk_sizes) {
      for (std::uint64_t n : sizes) {
        for (std::uint32_t trial = 0; trial < trials; ++trial) {
          Rng content_rng(derive_seed(seed, {1, n, trial}));
          const Bytes content = content_rng.bytes(n);
          const Measurement m =
              measure_pair(setup, chunk_size, key, content, std::nullopt);

          std::optional<double> bound;
          if (setup.policy == HeightPolicy::fixed_height(0)) {
            bound = static_cast<double>(n + kTagSize);
          } else if (setup.policy == HeightPolicy::fixed_height(1) &&
                     setup.scheme == Scheme::kStatic) {
            const std::uint64_t chunks = n == 0 ? 1 : (n + chunk_size - 1) / chunk_size;
            bound = static_cast<double>(n + chunks * 2 * kTagSize + kTagSize);
          } else if (setup.policy.is_auto()) {
            bound = model::storage_full(n, chunk_size);
          }
          rows.push_back({"expansion", setup.scheme, setup.policy, chunk_size,
                          n, 0, trial, 0, m.after, m.after, bound});
        }
      }
    }
  }
  return rows;
}

namespace {

std::vector<Row> run_single_edit(const char* name, bool insert_edit,
                                 const std::vector<SchemeSetup>& setups,
                                 const std::vector<std::uint64_t>& chunk_sizes,
                                 std::uint64_t n, std::uint32_t trials,
                                 std::uint64_t seed) {
  const MasterKey key = key_for(seed);
  std::vector<Row> rows;
  for (const SchemeSetup& setup : setups) {
    for (std::uint64_t chunk_size : chunk_sizes) {
      for (std::uint32_t trial = 0; trial < trials; ++trial) {
        Rng content_rng(derive_seed(seed, {1, n, trial}));
        const Bytes content = content_rng.bytes(n);
        Rng edit_rng(derive_seed(seed, {insert_edit ? 4u : 3u, n, trial}));
        const Bytes edited =
            insert_edit ? insert_random_byte(edit_rng, content)
                        : overwrite_random_substring(edit_rng, content, 1);
        const Measurement m =
            measure_pair(setup, chunk_size, key, content, edited);

        std::optional<double> bound;
        if (!insert_edit) {
          bound = overwrite_bound(setup, chunk_size, n);
        } else if (setup.scheme == Scheme::kContentDefined &&
                   setup.policy.is_auto()) {
          // Content-defined boundaries resynchronize after a shift, so
          // the overwrite bound still applies.
          bound = overwrite_bound(setup, chunk_size, n);
        }
        rows.push_back({name, setup.scheme, setup.policy, chunk_size, n, 1,
                        trial, m.before, m.after, m.after - m.before, bound});
      }
    }
  }
  return rows;
}

}  // namespace

std::vector<Row> run_overwrite(const std::vector<SchemeSetup>& setups,
                               const std::vector<std::uint64_t>& chunk_sizes,
                               std::uint64_t n, std::uint32_t trials,
                               std::uint64_t seed) {
  return run_single_edit("overwrite", false, setups, chunk_sizes, n, trials,
                         seed);
}

std::vector<Row> run_insert(const std::vector<SchemeSetup>& setups,
                            const std::vector<std::uint64_t>& chunk_sizes,
                            std::uint64_t n, std::uint32_t trials,
                            std::uint64_t seed) {
  return run_single_edit("insert", true, setups, chunk_sizes, n, trials, seed);
}

std::vector<Row> run_versions(const std::vector<SchemeSetup>& setups,
                              const std::vector<std::uint64_t>& chunk_sizes,
                              std::uint64_t n, std::uint32_t versions,
                              std::uint32_t trials, std::uint64_t seed) {
  const MasterKey key = key_for(seed);
  std::vector<Row> rows;
  for (const SchemeSetup& setup : setups) {
    for (std::uint64_t chunk_size : chunk_sizes) {
      for (std::uint32_t trial = 0; trial < trials; ++trial) {
        MemoryKvs kvs;
        ContentStore store(kvs, key, config_for(setup, chunk_size));
        Rng content_rng(derive_seed(seed, {5, n, trial}));
        Bytes content = content_rng.bytes(n);

        std::uint64_t before = 0;
        for (std::uint32_t version = 0; version <= versions; ++version) {
          if (version > 0) {
            Rng edit_rng(derive_seed(seed, {6, n, trial, version}));
            content = insert_random_byte(edit_rng, content);
          }
          store.put_content(content);
          const std::uint64_t after = kvs.report().total_bytes;
          rows.push_back({"versions", setup.scheme, setup.policy, chunk_size,
                          n, version, trial, before, after, after - before,
                          std::nullopt});
          before = after;
        }
      }
    }
  }
  return rows;
}

namespace {

std::vector<fs::path> sorted_dirs(const fs::path& root) {
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

std::vector<fs::path> sorted_files(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)),
               std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<Row> run_corpus(const std::vector<SchemeSetup>& setups,
                            const std::vector<std::uint64_t>& chunk_sizes,
                            const fs::path& corpus_dir) {
  const std::vector<fs::path> snapshots = sorted_dirs(corpus_dir);
  if (snapshots.empty()) {
    throw std::runtime_error("corpus has no snapshot directories: " +
                             corpus_dir.string());
  }
  const MasterKey key = key_for(0);  // the corpus itself carries the data
  std::vector<Row> rows;
  for (const SchemeSetup& setup : setups) {
    for (std::uint64_t chunk_size : chunk_sizes) {
      MemoryKvs kvs;
      ContentStore store(kvs, key, config_for(setup, chunk_size));
      std::uint64_t before = 0;
      for (std::size_t i = 0; i < snapshots.size(); ++i) {
        std::uint64_t inserted = 0;
        for (const fs::path& file : sorted_files(snapshots[i])) {
          const Bytes content = read_file(file);
          inserted += content.size();
          store.put_content(content);
        }
        const std::uint64_t after = kvs.report().total_bytes;
        rows.push_back({"corpus", setup.scheme, setup.policy, chunk_size,
                        inserted, i, 0, before, after, after - before,
                        std::nullopt});
        before = after;
      }
    }
  }
  return rows;
}

void generate_corpus(const fs::path& corpus_dir, std::uint32_t versions,
                     std::uint64_t size, std::uint64_t seed) {
  fs::create_directories(corpus_dir);
  Rng content_rng(derive_seed(seed, {7, size}));
  Bytes content = content_rng.bytes(size);
  for (std::uint32_t version = 0; version < versions; ++version) {
    if (version > 0) {
      Rng edit_rng(derive_seed(seed, {8, size, version}));
      content = insert_random_byte(edit_rng, content);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "version_%03" PRIu32, version);
    const fs::path dir = corpus_dir / name;
    fs::create_directories(dir);
    std::ofstream out(dir / "file.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write corpus file");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
}

}  // namespace mlcs::harness
