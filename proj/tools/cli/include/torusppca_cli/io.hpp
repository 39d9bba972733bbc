#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace torusppca::cli {

/// Whole-file read; throws std::runtime_error naming the path on failure.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

/// 64-bit FNV-1a digest as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

}  // namespace torusppca::cli
