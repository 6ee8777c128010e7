// SHA-256 digests for run-manifest provenance and stage caching.

#pragma once

#include <string>
#include <string_view>

namespace genenet {

std::string sha256_hex(std::string_view data);

// Streams the file in chunks; throws std::runtime_error if it cannot be read.
std::string sha256_file_hex(const std::string& path);

}  // namespace genenet
