#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace instructforge::util {

std::string read_file(const std::filesystem::path& path);

// Writes to a unique temporary sibling and renames it over `path`, so readers
// never observe a partial file and concurrent writers of one path are safe.
void atomic_write(const std::filesystem::path& path, std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

std::string_view trim(std::string_view text);

}  // namespace instructforge::util
