// Drives the installed binary end to end. The test runner passes the
// binary path in MLCS_CLI; without it these cases are skipped.

#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "mlcs/bytes.hpp"
#include "support.hpp"

using mlcs::Bytes;
using mlcs::test::TempDir;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer;
  std::size_t n = 0;
  while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

const char* cli_path() { return std::getenv("MLCS_CLI"); }

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return Bytes((std::istreambuf_iterator<char>(in)),
               std::istreambuf_iterator<char>());
}

std::string strip(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  return text;
}

}  // namespace

TEST_CASE("cli end to end: keygen, init, put, get, delete, stats") {
  if (cli_path() == nullptr) {
    MESSAGE("MLCS_CLI not set; skipping");
    return;
  }
  const std::string cli = cli_path();
  TempDir dir("cli");
  const std::string key_file = (dir.path() / "master.key").string();
  const std::string store = "dir:" + (dir.path() / "store").string();
  const std::string common =
      " --backend " + store + " --key-file " + key_file;

  CHECK(run(cli + " keygen --key-file " + key_file).exit_code == 0);
  CHECK(run(cli + " keygen --key-file " + key_file).exit_code != 0);
  CHECK(std::filesystem::file_size(key_file) == 64);

  CHECK(run(cli + " init" + common +
            " --scheme cdc --chunk-size 128 --refcount")
            .exit_code == 0);

  // Fresh store is empty.
  auto stats = run(cli + " stats --backend " + store);
  CHECK(stats.exit_code == 0);
  CHECK(stats.output.find("elements 0") != std::string::npos);

  // put / get round-trip.
  const auto input = dir.path() / "input.bin";
  {
    std::ofstream out(input, std::ios::binary);
    for (int i = 0; i < 50000; ++i) out.put(static_cast<char>(i * 31 + 7));
  }
  const auto put = run(cli + " put" + common + " " + input.string());
  REQUIRE(put.exit_code == 0);
  const std::string content_key = strip(put.output);
  CHECK(content_key.find(':') == 64);

  const auto output = dir.path() / "output.bin";
  CHECK(run(cli + " get" + common + " " + content_key + " --out " +
            output.string())
            .exit_code == 0);
  CHECK(read_file(output) == read_file(input));

  // Unknown root: missing-chunk exit code.
  const std::string bogus(64, '0');
  CHECK(run(cli + " get" + common + " " + bogus + ":0 --out /dev/null")
            .exit_code == 2);

  // Corrupt one object file: authenticity exit code.
  std::filesystem::path victim;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(
           dir.path() / "store" / "objects")) {
    if (entry.is_regular_file() && entry.file_size() > 0) {
      victim = entry.path();
      break;
    }
  }
  REQUIRE(!victim.empty());
  const Bytes original = read_file(victim);
  {
    Bytes corrupted = original;
    corrupted[0] = static_cast<char>(corrupted[0] ^ 0x01);
    std::ofstream out(victim, std::ios::binary | std::ios::trunc);
    out.write(corrupted.data(), static_cast<std::streamsize>(corrupted.size()));
  }
  CHECK(run(cli + " get" + common + " " + content_key + " --out /dev/null")
            .exit_code == 3);
  {
    std::ofstream out(victim, std::ios::binary | std::ios::trunc);
    out.write(original.data(), static_cast<std::streamsize>(original.size()));
  }

  // delete drains the store.
  CHECK(run(cli + " delete" + common + " " + content_key).exit_code == 0);
  stats = run(cli + " stats --backend " + store);
  CHECK(stats.output.find("elements 0") != std::string::npos);
  CHECK(run(cli + " delete" + common + " " + content_key).exit_code != 0);

  // Re-init over an existing store is refused.
  CHECK(run(cli + " init" + common + " --scheme cdc --chunk-size 128")
            .exit_code != 0);
}

TEST_CASE("cli experiments write reproducible csv") {
  if (cli_path() == nullptr) {
    MESSAGE("MLCS_CLI not set; skipping");
    return;
  }
  const std::string cli = cli_path();
  TempDir dir("cli_exp");
  const std::string args =
      " --scheme ml-cdc --chunk-size 128 --size 16384 --trials 2 --seed 5 ";

  const auto a = run(cli + " exp-overwrite" + args + "--out -");
  const auto b = run(cli + " exp-overwrite" + args + "--out -");
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);
  CHECK(a.output.find("experiment,scheme,height_policy") == 0);
  CHECK(a.output.find("overwrite,cdc,auto,128,16384") != std::string::npos);

  const std::string corpus = (dir.path() / "corpus").string();
  CHECK(run(cli + " gen-corpus --out " + corpus +
            " --versions 3 --size 4096 --seed 9")
            .exit_code == 0);
  const auto rows = run(cli + " exp-corpus --scheme cdc --chunk-size 128 " +
                        corpus + " --out -");
  CHECK(rows.exit_code == 0);
  CHECK(rows.output.find("corpus,cdc,1,128") != std::string::npos);
}
