#include "mlcs/harness.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mlcs/model.hpp"
#include "support.hpp"

using namespace mlcs;
using namespace mlcs::harness;
using mlcs::test::TempDir;

namespace {

std::string csv_of(const std::vector<Row>& rows) {
  std::ostringstream out;
  write_csv(out, rows);
  return out.str();
}

const std::vector<SchemeSetup> kMlCdc{*parse_setup("ml-cdc")};

}  // namespace

TEST_CASE("rng bounded sampling stays in range and is deterministic") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t bound = 1 + (a.next() % 1000);
    const std::uint64_t x = a.below(bound);
    CHECK(x < bound);
    b.next();
    CHECK(b.below(bound) == x);
  }
  CHECK(Rng(1).bytes(37) == Rng(1).bytes(37));
  CHECK(Rng(1).bytes(37) != Rng(2).bytes(37));
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(42, {1, 2}) != derive_seed(42, {2, 1}));
  CHECK(derive_seed(42, {1}) != derive_seed(43, {1}));
  CHECK(derive_seed(42, {1, 2}) == derive_seed(42, {1, 2}));
}

TEST_CASE("edit helpers") {
  Rng rng(5);
  const Bytes content = rng.bytes(1000);

  SUBCASE("overwrite preserves length and changes the substring") {
    for (std::uint64_t delta : {1u, 2u, 64u, 1000u}) {
      Rng edit(123 + delta);
      const Bytes edited = overwrite_random_substring(edit, content, delta);
      CHECK(edited.size() == content.size());
      CHECK(edited != content);
      // Bytes outside one delta-length stretch are untouched.
      std::size_t first = 0;
      while (first < content.size() && edited[first] == content[first]) first++;
      std::size_t last = content.size();
      while (last > 0 && edited[last - 1] == content[last - 1]) last--;
      CHECK(last - first <= delta);
    }
    CHECK_THROWS_AS(overwrite_random_substring(rng, content, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(overwrite_random_substring(rng, content, 1001),
                    std::invalid_argument);
  }

  SUBCASE("insert adds exactly one byte") {
    const Bytes edited = insert_random_byte(rng, content);
    CHECK(edited.size() == content.size() + 1);
  }
}

TEST_CASE("setup names round-trip") {
  for (const char* name : {"wfc", "sc", "cdc", "ml-sc", "ml-cdc"}) {
    const auto setup = parse_setup(name);
    REQUIRE(setup.has_value());
    CHECK(setup_label(*setup) == name);
  }
  CHECK_FALSE(parse_setup("nope").has_value());
}

TEST_CASE("identical seeds give byte-identical csv") {
  const std::vector<std::uint64_t> sizes{4096};
  const auto rows1 = run_delta(kMlCdc, sizes, 32768, {1, 64}, 3, 42);
  const auto rows2 = run_delta(kMlCdc, sizes, 32768, {1, 64}, 3, 42);
  const auto rows3 = run_delta(kMlCdc, sizes, 32768, {1, 64}, 3, 43);
  CHECK(csv_of(rows1) == csv_of(rows2));
  CHECK(csv_of(rows1) != csv_of(rows3));
  CHECK(csv_of(rows1).rfind(kCsvHeader, 0) == 0);
}

TEST_CASE("delta rows carry the substring-replacement bound") {
  const auto rows = run_delta(kMlCdc, {128}, 16384, {1, 256}, 2, 1);
  REQUIRE(rows.size() == 4);
  const std::uint32_t h = tree_height(16384, 128);
  for (const Row& row : rows) {
    CHECK(row.delta_bytes == row.bytes_after - row.bytes_before);
    REQUIRE(row.model_bound.has_value());
    const double expected =
        row.delta == 1
            ? model::add_strg_cdc(h, 128)
            : model::delta_strg(Scheme::kContentDefined, h, row.delta, 128);
    CHECK(*row.model_bound == doctest::Approx(expected));
  }
}

TEST_CASE("expansion rows of fixed-height stores carry exact references") {
  const std::vector<SchemeSetup> setups{*parse_setup("wfc"), *parse_setup("sc"),
                                        *parse_setup("ml-cdc")};
  const auto rows = run_expansion(setups, {128}, {10000}, 1, 9);
  REQUIRE(rows.size() == 3);

  CHECK(rows[0].bytes_after == 10000 + 32);  // wfc: one element
  CHECK(*rows[0].model_bound == 10000 + 32);

  const std::uint64_t chunks = (10000 + 127) / 128;
  CHECK(rows[1].bytes_after == 10000 + chunks * 64 + 32);
  CHECK(*rows[1].model_bound ==
        static_cast<double>(10000 + chunks * 64 + 32));

  CHECK(static_cast<double>(rows[2].bytes_after) <= *rows[2].model_bound);
}

TEST_CASE("version rows accumulate monotonically") {
  const auto rows = run_versions(kMlCdc, {128}, 8192, 5, 2, 11);
  REQUIRE(rows.size() == 2 * 6);
  for (const Row& row : rows) {
    CHECK(row.bytes_after >= row.bytes_before);
    CHECK(row.delta_bytes == row.bytes_after - row.bytes_before);
  }
  // Within one trial the "after" of version v is the "before" of v+1.
  for (std::size_t i = 0; i + 1 < 6; ++i) {
    CHECK(rows[i].bytes_after == rows[i + 1].bytes_before);
  }
}

TEST_CASE("corpus ingestion deduplicates identical snapshots") {
  TempDir dir("corpus_dup");
  for (const char* snap : {"snap_a", "snap_b"}) {
    std::filesystem::create_directories(dir.path() / snap);
    std::ofstream out(dir.path() / snap / "file.bin", std::ios::binary);
    out << Bytes(10000, 'd');
  }
  const auto rows = run_corpus(kMlCdc, {128}, dir.path());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].delta_bytes > 0);
  CHECK(rows[1].delta_bytes == 0);  // second snapshot is a duplicate
}

TEST_CASE("corpus of disjoint random files stays within the storage bound") {
  TempDir dir("corpus_rand");
  Rng rng(77);
  std::uint64_t total = 0;
  for (int snap = 0; snap < 3; ++snap) {
    const auto snap_dir =
        dir.path() / ("snap_" + std::to_string(snap));
    std::filesystem::create_directories(snap_dir);
    for (int f = 0; f < 2; ++f) {
      const Bytes data = rng.bytes(20000 + 1000 * f);
      total += data.size();
      std::ofstream out(snap_dir / ("f" + std::to_string(f) + ".bin"),
                        std::ios::binary);
      out.write(data.data(), static_cast<std::streamsize>(data.size()));
    }
  }
  const auto rows = run_corpus(kMlCdc, {128}, dir.path());
  const std::uint64_t stored = rows.back().bytes_after;
  CHECK(static_cast<double>(stored) <= model::storage_full(total, 128));
  CHECK(static_cast<double>(stored) >= 0.4 * model::storage_full(total, 128));
}

TEST_CASE("generated corpora are deterministic and layered") {
  TempDir a("gen_a"), b("gen_b");
  generate_corpus(a.path(), 4, 5000, 3);
  generate_corpus(b.path(), 4, 5000, 3);

  for (int v = 0; v < 4; ++v) {
    char name[32];
    std::snprintf(name, sizeof(name), "version_%03d", v);
    std::ifstream fa(a.path() / name / "file.bin", std::ios::binary);
    std::ifstream fb(b.path() / name / "file.bin", std::ios::binary);
    const Bytes da((std::istreambuf_iterator<char>(fa)),
                   std::istreambuf_iterator<char>());
    const Bytes db((std::istreambuf_iterator<char>(fb)),
                   std::istreambuf_iterator<char>());
    CHECK(da == db);
    CHECK(da.size() == 5000 + static_cast<std::size_t>(v));
  }
}
