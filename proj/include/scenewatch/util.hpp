#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace scenewatch {

/// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const unsigned char> bytes);
inline std::string base64_encode(std::string_view bytes) {
  return base64_encode(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
}

/// Reads a whole file. Throws Error{Io} when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

}  // namespace scenewatch
