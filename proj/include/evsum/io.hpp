#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace evsum {

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place, so readers
/// never observe a partially written output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace evsum
