#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace imet {

/// Writes `contents` to a sibling temp file and renames it over `path`.
/// Readers observe either the old file or the complete new one.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> contents);

std::string read_file(const std::filesystem::path& path);

} // namespace imet
