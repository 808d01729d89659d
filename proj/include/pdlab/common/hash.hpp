#pragma once

#include <string>
#include <string_view>

namespace pdlab {

/// Raw 32-byte SHA-256 digest.
std::string sha256(std::string_view bytes);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

}  // namespace pdlab
