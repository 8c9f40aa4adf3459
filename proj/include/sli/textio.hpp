#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sli {

// Shortest round-trip decimal form (std::to_chars). Deterministic and
// locale-independent, so serialized documents are bit-stable.
std::string format_double(double v);

double parse_double(std::string_view s);
float parse_float(std::string_view s);
std::int64_t parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);

// Splits a tab-separated record of key=value fields.
std::vector<std::pair<std::string_view, std::string_view>> split_fields(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Splits on '\n', tolerating a trailing newline and CR line endings.
std::vector<std::string_view> split_lines(std::string_view text);

} // namespace sli
