#pragma once

#include <string>
#include <string_view>

namespace refine {

/// Lowercase hex SHA-256 of the bytes of `data`.
std::string sha256_hex(std::string_view data);

/// SHA-256 of a file's contents; throws IoError if unreadable.
std::string file_sha256_hex(const std::string& path);

}  // namespace refine
