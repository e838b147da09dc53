#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mlcs {

// Byte buffers are std::string throughout: cheap SSO for small chunk
// references, directly usable as map keys and for file I/O.
using Bytes = std::string;
using ByteView = std::string_view;

std::string to_hex(ByteView data);

// Throws std::invalid_argument on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

}  // namespace mlcs
