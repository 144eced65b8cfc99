#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace augrag {

/// Strip leading/trailing ASCII whitespace.
std::string_view trim(std::string_view s);

/// Number of unicode scalar values in a UTF-8 string (continuation bytes
/// are not counted).
std::size_t utf8_length(std::string_view s);

struct TokenizerConfig {
    bool lowercase = true;
};

/// Lowercase (ASCII) and split on runs of non-alphanumeric characters.
/// Bytes >= 0x80 count as word characters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg = {});

/// Split on ASCII whitespace runs.
std::vector<std::string_view> split_whitespace(std::string_view text);

/// Replace every occurrence of `placeholder` in `tmpl` with `value`.
std::string replace_all(std::string_view tmpl, std::string_view placeholder, std::string_view value);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view data);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace augrag
