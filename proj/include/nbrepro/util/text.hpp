#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nbrepro::util {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::filesystem::path& path);
// Creates parent directories. Throws nbrepro::Error on I/O failure.
void write_file(const std::filesystem::path& path, std::string_view content);

// ISO-8601 UTC with millisecond precision, e.g. 2024-05-01T12:00:00.123Z
std::string utc_timestamp();

} // namespace nbrepro::util
