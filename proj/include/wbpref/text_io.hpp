// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

// Shared helpers for the line-oriented text formats (profiles, datasets,
// predictions, models, reports).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wbpref::text {

/// Shortest "%.17g" rendering; parses back to the identical double.
std::string format_real(double value);

/// Fixed-point rendering with `decimals` digits after the dot.
std::string format_fixed(double value, int decimals);

/// Strict decimal parse: whole token must be consumed and the value finite.
std::optional<double> parse_real(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::vector<std::string_view> split_ws(std::string_view line);
std::vector<std::string_view> split_char(std::string_view line, char sep);
std::string_view trim(std::string_view s);

struct Line {
    std::string_view text;   ///< without the terminating newline
    std::size_t number = 0;  ///< 1-based
    std::size_t offset = 0;  ///< byte offset of the first character
};

/// Iterates the lines of an in-memory document. Handles a missing final
/// newline and strips a trailing '\r'.
class LineReader {
public:
    explicit LineReader(std::string_view doc) : doc_(doc) {}
    bool next(Line& out);
    std::size_t offset() const noexcept { return pos_; }

private:
    std::string_view doc_;
    std::size_t pos_ = 0;
    std::size_t number_ = 0;
};

std::string read_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace wbpref::text
