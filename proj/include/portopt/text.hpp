#pragma once

#include <charconv>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace portopt {

/// Shortest decimal representation that round-trips the double exactly.
/// Used for every emitted CSV and cache file so re-parsing reproduces the
/// in-memory value bit for bit.
inline std::string fmt_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

/// Fixed 17-significant-digit form (always round-trips).
std::string fmt_double17(double value);

inline std::optional<double> parse_double(std::string_view text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

/// Splits one CSV line on commas. No quoting support; the price schema and
/// our own report files never quote fields. A trailing '\r' is stripped.
std::vector<std::string> split_csv_line(std::string_view line);

/// Escapes &, <, >, and quotes for use in SVG/XML text and attributes.
std::string xml_escape(std::string_view text);

/// Writes `content` to `path`, creating parent directories. Throws IoError
/// on any failure.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Reads a whole file; throws IoError if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

} // namespace portopt
