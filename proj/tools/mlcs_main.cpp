// mlcs: deduplicating encrypted content store over a key-value backend,
// plus the storage-efficiency experiment commands.
//
// Exit codes: 0 success, 2 missing chunk, 3 authenticity failure,
// 1 any other error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mlcs/core.hpp"
#include "mlcs/harness.hpp"

namespace {

using namespace mlcs;
namespace fs = std::filesystem;

constexpr int kExitError = 1;
constexpr int kExitMissingChunk = 2;
constexpr int kExitAuthenticity = 3;

struct BackendSpec {
  bool memory = false;
  fs::path dir;
};

BackendSpec parse_backend(const std::string& text) {
  if (text == "memory") return {true, {}};
  if (text.rfind("dir:", 0) == 0 && text.size() > 4) {
    return {false, fs::path(text.substr(4))};
  }
  throw CLI::ValidationError("--backend", "expected 'memory' or 'dir:PATH'");
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)),
               std::istreambuf_iterator<char>());
}

void write_output(const std::string& path, ByteView data) {
  if (path.empty() || path == "-") {
    std::cout.write(data.data(), static_cast<std::streamsize>(data.size()));
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

// Options shared by the store subcommands.
struct StoreOptions {
  std::string backend = "memory";
  std::string key_file;
};

void add_store_options(CLI::App* cmd, StoreOptions& opts) {
  cmd->add_option("--backend", opts.backend, "memory or dir:PATH")
      ->required();
  cmd->add_option("--key-file", opts.key_file, "64-byte raw key file")
      ->required();
}

DirStore open_store(const StoreOptions& opts) {
  const BackendSpec backend = parse_backend(opts.backend);
  if (backend.memory) {
    throw std::runtime_error(
        "store subcommands need a persistent backend (dir:PATH)");
  }
  return open_dir_store(backend.dir, MasterKey::load(opts.key_file));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string::npos ? text.size() : comma;
    if (end > start) items.push_back(text.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

std::vector<std::uint64_t> split_numbers(const char* flag,
                                         const std::string& text) {
  std::vector<std::uint64_t> numbers;
  for (const std::string& item : split_list(text)) {
    try {
      numbers.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw CLI::ValidationError(flag, "expected a comma-separated number list");
    }
  }
  if (numbers.empty()) {
    throw CLI::ValidationError(flag, "expected at least one value");
  }
  return numbers;
}

// Options shared by the experiment subcommands. List-valued options are
// single comma-separated arguments, e.g. --chunk-size 128,256.
struct ExperimentOptions {
  std::string schemes = "ml-cdc";
  std::string chunk_sizes = "128";
  std::uint64_t size = 1 << 20;
  std::string deltas = "1";
  std::uint32_t versions = 125;
  std::uint32_t trials = 20;
  std::uint64_t seed = 42;
  std::string out;

  std::vector<harness::SchemeSetup> setups() const {
    std::vector<harness::SchemeSetup> result;
    for (const std::string& name : split_list(schemes)) {
      const auto setup = harness::parse_setup(name);
      if (!setup) {
        throw CLI::ValidationError(
            "--scheme", "expected one of wfc, sc, cdc, ml-sc, ml-cdc");
      }
      result.push_back(*setup);
    }
    if (result.empty()) {
      throw CLI::ValidationError("--scheme", "expected at least one value");
    }
    return result;
  }

  std::vector<std::uint64_t> sizes() const {
    return split_numbers("--chunk-size", chunk_sizes);
  }
  std::vector<std::uint64_t> delta_list() const {
    return split_numbers("--delta", deltas);
  }

  void emit(const std::vector<harness::Row>& rows) const {
    if (out.empty() || out == "-") {
      harness::write_csv(std::cout, rows);
      return;
    }
    std::ofstream file(out, std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + out);
    harness::write_csv(file, rows);
  }
};

void add_experiment_options(CLI::App* cmd, ExperimentOptions& opts,
                            bool with_size = true) {
  cmd->add_option("--scheme", opts.schemes,
                  "comma list of wfc, sc, cdc, ml-sc, ml-cdc");
  cmd->add_option("--chunk-size", opts.chunk_sizes,
                  "comma list of target chunk sizes S");
  if (with_size) {
    cmd->add_option("--size", opts.size, "content size in bytes");
  }
  cmd->add_option("--trials", opts.trials, "trials per combination")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts.seed, "rng seed");
  cmd->add_option("--out", opts.out, "CSV output path ('-' for stdout)");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"deduplicating encrypted content store"};
  app.require_subcommand(1);

  // keygen
  auto* keygen = app.add_subcommand("keygen", "generate a master key file");
  std::string keygen_path;
  bool keygen_force = false;
  keygen->add_option("--key-file", keygen_path, "output path")->required();
  keygen->add_flag("--force", keygen_force, "overwrite an existing file");
  keygen->callback([&] {
    if (!keygen_force && fs::exists(keygen_path)) {
      throw std::runtime_error("key file exists (use --force): " + keygen_path);
    }
    MasterKey::generate().save(keygen_path);
  });

  // init
  auto* init = app.add_subcommand("init", "initialize a store directory");
  StoreOptions init_store;
  std::string init_scheme = "cdc";
  std::string init_height = "auto";
  std::uint64_t init_chunk = 4096;
  std::uint32_t init_window = kDefaultWindow;
  std::uint64_t init_min = 0, init_max = 0;
  bool init_refcount = false;
  add_store_options(init, init_store);
  init->add_option("--scheme", init_scheme, "sc or cdc");
  init->add_option("--height", init_height, "auto or a fixed height");
  init->add_option("--chunk-size", init_chunk, "target chunk size S");
  init->add_option("--window", init_window, "cdc window size");
  init->add_option("--min-chunk", init_min, "minimum chunk length (cdc)");
  init->add_option("--max-chunk", init_max, "maximum chunk length (cdc)");
  init->add_flag("--refcount", init_refcount,
                 "track reference counts; enables delete");
  init->callback([&] {
    const BackendSpec backend = parse_backend(init_store.backend);
    if (backend.memory) {
      throw std::runtime_error("init needs a dir:PATH backend");
    }
    StoreConfig config;
    const auto scheme = parse_scheme(init_scheme);
    if (!scheme) throw std::runtime_error("unknown scheme " + init_scheme);
    config.scheme = *scheme;
    const auto policy = parse_height_policy(init_height);
    if (!policy) throw std::runtime_error("unknown height " + init_height);
    config.height_policy = *policy;
    config.chunk_size = init_chunk;
    config.window = init_window;
    if (init_min > 0) config.min_chunk = init_min;
    if (init_max > 0) config.max_chunk = init_max;
    config.refcounting = init_refcount;
    auto store = create_dir_store(backend.dir, MasterKey::load(init_store.key_file),
                                  config);
    store.flush();
  });

  // put
  auto* put = app.add_subcommand("put", "insert a file, print its content key");
  StoreOptions put_store;
  std::string put_file;
  add_store_options(put, put_store);
  put->add_option("file", put_file, "input file")->required();
  put->callback([&] {
    auto store = open_store(put_store);
    const ContentKey key = store.store->put_content(read_file(put_file));
    store.flush();
    std::cout << key.to_string() << '\n';
  });

  // get
  auto* get = app.add_subcommand("get", "retrieve a content by key");
  StoreOptions get_store;
  std::string get_key, get_out;
  add_store_options(get, get_store);
  get->add_option("key", get_key, "content key (<64 hex>:<height>)")
      ->required();
  get->add_option("--out", get_out, "output file ('-' for stdout)");
  get->callback([&] {
    auto store = open_store(get_store);
    write_output(get_out, store.store->get_content(ContentKey::parse(get_key)));
  });

  // delete
  auto* del = app.add_subcommand("delete", "delete a content (refcounted)");
  StoreOptions del_store;
  std::string del_key;
  add_store_options(del, del_store);
  del->add_option("key", del_key, "content key")->required();
  del->callback([&] {
    auto store = open_store(del_store);
    store.store->delete_content(ContentKey::parse(del_key));
    store.flush();
  });

  // stats
  auto* stats = app.add_subcommand("stats", "print the storage report");
  std::string stats_backend;
  stats->add_option("--backend", stats_backend, "dir:PATH")->required();
  stats->callback([&] {
    const BackendSpec backend = parse_backend(stats_backend);
    if (backend.memory) throw std::runtime_error("stats needs dir:PATH");
    DirKvs kvs(backend.dir);
    const StorageReport report = kvs.report();
    std::cout << "elements " << report.element_count << '\n'
              << "total_bytes " << report.total_bytes << '\n';
  });

  // experiments
  ExperimentOptions exp_delta_opts;
  auto* exp_delta = app.add_subcommand(
      "exp-delta", "storage delta for replaced random substrings");
  add_experiment_options(exp_delta, exp_delta_opts);
  exp_delta->add_option("--delta", exp_delta_opts.deltas,
                        "substring lengths (repeatable)")
      ->delimiter(',');
  exp_delta->callback([&] {
    exp_delta_opts.emit(harness::run_delta(
        exp_delta_opts.setups(), exp_delta_opts.chunk_sizes,
        exp_delta_opts.size, exp_delta_opts.deltas, exp_delta_opts.trials,
        exp_delta_opts.seed));
  });

  ExperimentOptions exp_expansion_opts;
  exp_expansion_opts.schemes = {"wfc", "sc", "cdc", "ml-sc", "ml-cdc"};
  std::vector<std::uint64_t> expansion_sizes{1 << 20};
  auto* exp_expansion = app.add_subcommand(
      "exp-expansion", "storage expansion factor of fresh contents");
  add_experiment_options(exp_expansion, exp_expansion_opts, false);
  exp_expansion->add_option("--size", expansion_sizes,
                            "content sizes (repeatable)")
      ->delimiter(',');
  exp_expansion->callback([&] {
    exp_expansion_opts.emit(harness::run_expansion(
        exp_expansion_opts.setups(), exp_expansion_opts.chunk_sizes,
        expansion_sizes, exp_expansion_opts.trials, exp_expansion_opts.seed));
  });

  ExperimentOptions exp_overwrite_opts;
  exp_overwrite_opts.schemes = {"wfc", "sc", "cdc", "ml-sc", "ml-cdc"};
  auto* exp_overwrite = app.add_subcommand(
      "exp-overwrite", "storage delta for a single overwritten byte");
  add_experiment_options(exp_overwrite, exp_overwrite_opts);
  exp_overwrite->callback([&] {
    exp_overwrite_opts.emit(harness::run_overwrite(
        exp_overwrite_opts.setups(), exp_overwrite_opts.chunk_sizes,
        exp_overwrite_opts.size, exp_overwrite_opts.trials,
        exp_overwrite_opts.seed));
  });

  ExperimentOptions exp_insert_opts;
  exp_insert_opts.schemes = {"wfc", "sc", "cdc", "ml-sc", "ml-cdc"};
  auto* exp_insert = app.add_subcommand(
      "exp-insert", "storage delta for a single inserted byte");
  add_experiment_options(exp_insert, exp_insert_opts);
  exp_insert->callback([&] {
    exp_insert_opts.emit(harness::run_insert(
        exp_insert_opts.setups(), exp_insert_opts.chunk_sizes,
        exp_insert_opts.size, exp_insert_opts.trials, exp_insert_opts.seed));
  });

  ExperimentOptions exp_versions_opts;
  exp_versions_opts.trials = 3;
  auto* exp_versions = app.add_subcommand(
      "exp-versions", "cumulative storage across edited versions");
  add_experiment_options(exp_versions, exp_versions_opts);
  exp_versions->add_option("--versions", exp_versions_opts.versions,
                           "number of edited versions");
  exp_versions->callback([&] {
    exp_versions_opts.emit(harness::run_versions(
        exp_versions_opts.setups(), exp_versions_opts.chunk_sizes,
        exp_versions_opts.size, exp_versions_opts.versions,
        exp_versions_opts.trials, exp_versions_opts.seed));
  });

  ExperimentOptions exp_corpus_opts;
  std::string corpus_path;
  auto* exp_corpus = app.add_subcommand(
      "exp-corpus", "cumulative storage across snapshot directories");
  add_experiment_options(exp_corpus, exp_corpus_opts, false);
  exp_corpus->add_option("corpus", corpus_path,
                         "directory of snapshot subdirectories")
      ->required();
  exp_corpus->callback([&] {
    exp_corpus_opts.emit(harness::run_corpus(exp_corpus_opts.setups(),
                                             exp_corpus_opts.chunk_sizes,
                                             corpus_path));
  });

  auto* gen_corpus =
      app.add_subcommand("gen-corpus", "generate a synthetic snapshot corpus");
  std::string gen_out;
  std::uint32_t gen_versions = 200;
  std::uint64_t gen_size = 262144;
  std::uint64_t gen_seed = 42;
  gen_corpus->add_option("--out", gen_out, "corpus directory")->required();
  gen_corpus->add_option("--versions", gen_versions, "snapshot count");
  gen_corpus->add_option("--size", gen_size, "initial file size");
  gen_corpus->add_option("--seed", gen_seed, "rng seed");
  gen_corpus->callback([&] {
    harness::generate_corpus(gen_out, gen_versions, gen_size, gen_seed);
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const MissingChunkError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitMissingChunk;
  } catch (const AuthenticityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitAuthenticity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
