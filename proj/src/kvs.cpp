#include "mlcs/kvs.hpp"

#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <system_error>
#include <vector>

namespace mlcs {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// MemoryKvs

void MemoryKvs::put(ByteView key, ByteView value) {
  std::unique_lock lock(mutex_);
  auto it = map_.find(Bytes(key));
  if (it == map_.end()) {
    map_.emplace(Bytes(key), Bytes(value));
    report_.element_count += 1;
    report_.total_bytes += key.size() + value.size();
  } else {
    report_.total_bytes += value.size();
    report_.total_bytes -= it->second.size();
    it->second.assign(value);
  }
}

std::optional<Bytes> MemoryKvs::get(ByteView key) const {
  std::shared_lock lock(mutex_);
  auto it = map_.find(Bytes(key));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

bool MemoryKvs::exists(ByteView key) const {
  std::shared_lock lock(mutex_);
  return map_.find(Bytes(key)) != map_.end();
}

bool MemoryKvs::erase(ByteView key) {
  std::unique_lock lock(mutex_);
  auto it = map_.find(Bytes(key));
  if (it == map_.end()) return false;
  report_.element_count -= 1;
  report_.total_bytes -= it->first.size() + it->second.size();
  map_.erase(it);
  return true;
}

StorageReport MemoryKvs::report() const {
  std::shared_lock lock(mutex_);
  return report_;
}

void MemoryKvs::for_each(
    const std::function<void(ByteView, ByteView)>& fn) const {
  std::shared_lock lock(mutex_);
  for (const auto& [key, value] : map_) fn(key, value);
}

// ---------------------------------------------------------------------------
// DirKvs

namespace {

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw KvsError("cannot read " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)),
             std::istreambuf_iterator<char>());
  if (in.bad()) throw KvsError("i/o error reading " + path.string());
  return data;
}

void write_file_atomic(const fs::path& target, const fs::path& tmp,
                       ByteView data) {
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw KvsError("cannot create " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw KvsError("i/o error writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw KvsError("cannot rename " + tmp.string() + ": " + ec.message());
  }
}

}  // namespace

DirKvs::DirKvs(fs::path root)
    : root_(std::move(root)), objects_(root_ / "objects") {
  fs::create_directories(objects_);
  for (const auto& entry : fs::recursive_directory_iterator(objects_)) {
    if (!entry.is_regular_file()) continue;
    report_.element_count += 1;
    report_.total_bytes +=
        entry.path().filename().string().size() / 2 + entry.file_size();
  }
}

fs::path DirKvs::path_for(ByteView key) const {
  if (key.size() < 2) throw KvsError("key too short for fan-out layout");
  const std::string hex = to_hex(key);
  return objects_ / hex.substr(0, 2) / hex.substr(2, 2) / hex;
}

void DirKvs::put(ByteView key, ByteView value) {
  const fs::path target = path_for(key);
  fs::create_directories(target.parent_path());

  std::uint64_t old_size = 0;
  bool existed = false;
  {
    std::error_code ec;
    const auto size = fs::file_size(target, ec);
    if (!ec) {
      existed = true;
      old_size = size;
    }
  }

  fs::path tmp;
  {
    std::unique_lock lock(mutex_);
    tmp = objects_ / ("tmp." + std::to_string(::getpid()) + "." +
                      std::to_string(tmp_counter_++));
  }
  write_file_atomic(target, tmp, value);

  std::unique_lock lock(mutex_);
  if (existed) {
    report_.total_bytes += value.size();
    report_.total_bytes -= old_size;
  } else {
    report_.element_count += 1;
    report_.total_bytes += key.size() + value.size();
  }
}

std::optional<Bytes> DirKvs::get(ByteView key) const {
  const fs::path target = path_for(key);
  if (!fs::exists(target)) return std::nullopt;
  return read_file(target);
}

bool DirKvs::exists(ByteView key) const { return fs::exists(path_for(key)); }

bool DirKvs::erase(ByteView key) {
  const fs::path target = path_for(key);
  std::error_code ec;
  const auto size = fs::file_size(target, ec);
  if (ec) return false;
  if (!fs::remove(target, ec) || ec) return false;
  std::unique_lock lock(mutex_);
  report_.element_count -= 1;
  report_.total_bytes -= key.size() + size;
  return true;
}

StorageReport DirKvs::report() const {
  std::shared_lock lock(mutex_);
  return report_;
}

void DirKvs::for_each(const std::function<void(ByteView, ByteView)>& fn) const {
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(objects_)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const Bytes key = from_hex(path.filename().string());
    const Bytes value = read_file(path);
    fn(key, value);
  }
}

// ---------------------------------------------------------------------------
// RefcountKvs

RefcountKvs::RefcountKvs(Kvs& inner, std::optional<fs::path> sidecar,
                         bool count_sidecar_in_report)
    : inner_(inner),
      sidecar_(std::move(sidecar)),
      count_sidecar_in_report_(count_sidecar_in_report) {
  if (!sidecar_ || !fs::exists(*sidecar_)) return;
  std::ifstream in(*sidecar_);
  if (!in) throw KvsError("cannot read sidecar " + sidecar_->string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw KvsError("malformed sidecar line: " + line);
    }
    counts_[from_hex(line.substr(0, tab))] =
        std::stoull(line.substr(tab + 1));
  }
}

RefcountKvs::~RefcountKvs() {
  try {
    flush();
  } catch (...) {
    // Destructor must not throw; callers needing the error call flush().
  }
}

std::uint64_t RefcountKvs::incr(ByteView key) {
  dirty_ = true;
  return ++counts_[Bytes(key)];
}

std::uint64_t RefcountKvs::decr(ByteView key) {
  auto it = counts_.find(Bytes(key));
  if (it == counts_.end() || it->second == 0) {
    throw KvsError("refcount underflow for key " + to_hex(key));
  }
  dirty_ = true;
  if (--it->second > 0) return it->second;
  counts_.erase(it);
  inner_.erase(key);
  return 0;
}

std::uint64_t RefcountKvs::count(ByteView key) const {
  auto it = counts_.find(Bytes(key));
  return it == counts_.end() ? 0 : it->second;
}

void RefcountKvs::flush() {
  if (!sidecar_ || !dirty_) return;
  fs::path tmp = *sidecar_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw KvsError("cannot create " + tmp.string());
    for (const auto& [key, count] : counts_) {
      out << to_hex(key) << '\t' << count << '\n';
    }
    if (!out) throw KvsError("i/o error writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, *sidecar_, ec);
  if (ec) throw KvsError("cannot rename sidecar: " + ec.message());
  dirty_ = false;
}

std::uint64_t RefcountKvs::sidecar_bytes() const {
  std::uint64_t total = 0;
  for (const auto& [key, count] : counts_) {
    total += key.size() * 2 + 1 + std::to_string(count).size() + 1;
  }
  return total;
}

void RefcountKvs::put(ByteView key, ByteView value) { inner_.put(key, value); }

std::optional<Bytes> RefcountKvs::get(ByteView key) const {
  return inner_.get(key);
}

bool RefcountKvs::exists(ByteView key) const { return inner_.exists(key); }

bool RefcountKvs::erase(ByteView key) { return inner_.erase(key); }

StorageReport RefcountKvs::report() const {
  StorageReport r = inner_.report();
  if (count_sidecar_in_report_) r.total_bytes += sidecar_bytes();
  return r;
}

void RefcountKvs::for_each(
    const std::function<void(ByteView, ByteView)>& fn) const {
  inner_.for_each(fn);
}

// ---------------------------------------------------------------------------
// TamperKvs

Bytes TamperKvs::fetch(ByteView key) const {
  auto value = inner_.get(key);
  if (!value) throw KvsError("tamper target absent: " + to_hex(key));
  return *std::move(value);
}

void TamperKvs::flip_byte(ByteView key, std::size_t index, std::uint8_t mask) {
  Bytes value = fetch(key);
  if (index >= value.size()) throw KvsError("tamper index out of range");
  value[index] = static_cast<char>(static_cast<std::uint8_t>(value[index]) ^
                                   mask);
  inner_.put(key, value);
}

void TamperKvs::truncate_tail(ByteView key, std::size_t count) {
  Bytes value = fetch(key);
  value.resize(value.size() - std::min(count, value.size()));
  inner_.put(key, value);
}

void TamperKvs::replace_value(ByteView key, ByteView value) {
  fetch(key);  // enforce existence
  inner_.put(key, value);
}

void TamperKvs::remove(ByteView key) {
  if (!inner_.erase(key)) {
    throw KvsError("tamper target absent: " + to_hex(key));
  }
}

void TamperKvs::swap_values(ByteView key_a, ByteView key_b) {
  const Bytes a = fetch(key_a);
  const Bytes b = fetch(key_b);
  inner_.put(key_a, b);
  inner_.put(key_b, a);
}

}  // namespace mlcs
