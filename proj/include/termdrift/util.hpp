#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace termdrift {

std::string trim(std::string_view s);
std::string lower_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);

// Splits on a single-character separator, trimming each piece and dropping
// pieces that trim to empty.
std::vector<std::string> split_trimmed(std::string_view s, char sep);

std::vector<std::string> split_lines(std::string_view s);

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temp file and rename so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// FNV-1a 64-bit, hex-encoded. Used for manifest content checksums.
std::string fnv1a64_hex(std::string_view data);

inline bool is_ascii_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool is_ascii_alnum(char c) {
  return is_ascii_letter(c) || (c >= '0' && c <= '9');
}

}  // namespace termdrift
