#include "mlcs/model.hpp"

#include <stdexcept>

namespace mlcs::model {

double exp_nodes(std::uint64_t n, std::uint64_t chunk_size) {
  if (n == 0) return 0.0;
  return static_cast<double>((2 * n + chunk_size - 1) / chunk_size);
}

double storage_full(std::uint64_t n, std::uint64_t chunk_size,
                    std::uint64_t tag_size) {
  return static_cast<double>(tag_size + chunk_size) * exp_nodes(n, chunk_size);
}

double add_strg_sc(std::uint32_t height, std::uint64_t chunk_size,
                   std::uint64_t tag_size) {
  return static_cast<double>(tag_size + chunk_size) * (height + 1);
}

double exp_new_nodes_cdc(std::uint32_t height, std::uint64_t chunk_size,
                         std::uint64_t ref_size, std::uint32_t window) {
  double total = 1.0;  // the root chunk always changes
  double p = 1.0 / static_cast<double>(chunk_size);  // R^h' / S^(h'+1)
  const double ratio =
      static_cast<double>(ref_size) / static_cast<double>(chunk_size);
  for (std::uint32_t level = 0; level < height; ++level) {
    total += 1.0 + 3.0 * window * (1.0 - p) * p;
    p *= ratio;
  }
  return total;
}

double exp_chunk_size_cdc(std::uint64_t chunk_size) {
  return 2.0 * static_cast<double>(chunk_size);
}

double add_strg_cdc(std::uint32_t height, std::uint64_t chunk_size,
                    std::uint64_t tag_size, std::uint32_t window,
                    std::uint64_t ref_size) {
  return static_cast<double>(tag_size + 2 * chunk_size) *
         exp_new_nodes_cdc(height, chunk_size, ref_size, window);
}

double delta_strg(Scheme scheme, std::uint32_t height, std::uint64_t delta,
                  std::uint64_t chunk_size, std::uint64_t tag_size,
                  std::uint32_t window, std::uint64_t ref_size) {
  if (delta < 2) {
    throw std::invalid_argument("delta_strg requires delta >= 2");
  }
  const double add =
      scheme == Scheme::kStatic
          ? add_strg_sc(height, chunk_size, tag_size)
          : add_strg_cdc(height, chunk_size, tag_size, window, ref_size);
  return 2.0 * add + storage_full(delta - 2, chunk_size, tag_size);
}

}  // namespace mlcs::model
