#include "mlcs/chunking.hpp"

#include <limits>
#include <stdexcept>

namespace mlcs {

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::kStatic ? "sc" : "cdc";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  if (name == "sc") return Scheme::kStatic;
  if (name == "cdc") return Scheme::kContentDefined;
  return std::nullopt;
}

void ChunkerSpec::validate() const {
  if (target_length < 1) {
    throw std::invalid_argument("chunker target length must be >= 1");
  }
  if (scheme == Scheme::kContentDefined) {
    if (window < 1) {
      throw std::invalid_argument("chunker window must be >= 1");
    }
    if (min_length && *min_length < 1) {
      throw std::invalid_argument("min chunk length must be >= 1");
    }
    if (max_length && *max_length < 1) {
      throw std::invalid_argument("max chunk length must be >= 1");
    }
    if (min_length && max_length && *min_length > *max_length) {
      throw std::invalid_argument("min chunk length exceeds max chunk length");
    }
  } else if (min_length || max_length) {
    throw std::invalid_argument("min/max chunk length apply to cdc only");
  }
}

namespace {

std::uint64_t pow_mult(std::uint32_t exp) {
  std::uint64_t r = 1;
  for (std::uint32_t i = 0; i < exp; ++i) r *= kRollingHashMultiplier;
  return r;
}

std::vector<std::uint64_t> static_boundaries(std::uint64_t target,
                                             std::uint64_t n) {
  std::vector<std::uint64_t> cuts;
  if (target < n) {
    cuts.reserve(static_cast<std::size_t>((n - 1) / target));
    for (std::uint64_t i = target; i < n; i += target) cuts.push_back(i);
  }
  return cuts;
}

std::vector<std::uint64_t> content_defined_boundaries(const ChunkerSpec& spec,
                                                      ByteView content) {
  const auto* data = reinterpret_cast<const unsigned char*>(content.data());
  const std::uint64_t n = content.size();
  const std::uint64_t target = spec.target_length;
  const std::uint64_t window = spec.window;
  const std::uint64_t criterion = target - 1;
  const bool pow2 = (target & (target - 1)) == 0;
  const std::uint64_t out_factor = pow_mult(spec.window);
  const std::uint64_t min_len = spec.min_length.value_or(1);
  const std::uint64_t max_len =
      spec.max_length.value_or(std::numeric_limits<std::uint64_t>::max());

  std::vector<std::uint64_t> cuts;
  std::uint64_t hash = 0;
  std::uint64_t last_cut = 0;
  for (std::uint64_t end = 1; end <= n; ++end) {
    // After absorbing byte end-1 the hash covers the window ending at `end`.
    hash = hash * kRollingHashMultiplier + data[end - 1];
    if (end > window) hash -= out_factor * data[end - 1 - window];
    if (end == n) break;  // the content end is an implicit boundary

    bool cut = false;
    if (end - last_cut == max_len) {
      cut = true;
    } else if (end >= window) {
      const std::uint64_t rem = pow2 ? (hash & (target - 1)) : (hash % target);
      cut = rem == criterion && end - last_cut >= min_len;
    }
    if (cut) {
      cuts.push_back(end);
      last_cut = end;
    }
  }
  return cuts;
}

}  // namespace

std::vector<std::uint64_t> boundaries(const ChunkerSpec& spec,
                                      ByteView content) {
  spec.validate();
  if (content.empty()) return {};
  if (spec.scheme == Scheme::kStatic) {
    return static_boundaries(spec.target_length, content.size());
  }
  return content_defined_boundaries(spec, content);
}

std::vector<ByteView> split(const ChunkerSpec& spec, ByteView content) {
  if (content.empty()) return {ByteView{}};
  const auto cuts = boundaries(spec, content);
  std::vector<ByteView> chunks;
  chunks.reserve(cuts.size() + 1);
  std::uint64_t prev = 0;
  for (std::uint64_t cut : cuts) {
    chunks.push_back(content.substr(prev, cut - prev));
    prev = cut;
  }
  chunks.push_back(content.substr(prev));
  return chunks;
}

}  // namespace mlcs
