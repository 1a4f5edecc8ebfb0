#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qzlora {

/// Raw byte payloads (image files, HTTP bodies) are carried as std::string.
using Bytes = std::string;

/// Lowercase hex SHA-256 of `data` (64 characters).
std::string sha256_hex(std::string_view data);

/// First 8 bytes of the SHA-256 of `data`, read big-endian.
std::uint64_t sha256_u64(std::string_view data);

}  // namespace qzlora
