#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace enrichkit {

/// Collapses every run of whitespace to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

/// Whitespace-delimited words. This is the unit for chunking and length policies.
std::vector<std::string> split_words(std::string_view text);

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end);

/// Keeps the first `max_words` whitespace-delimited words, joined by single spaces.
std::string truncate_words(std::string_view text, std::size_t max_words);

std::string to_lower_ascii(std::string_view text);

/// Porter stemmer, following the reference implementation published by its author
/// (including the "logi" and "bli" departures from the 1980 description).
/// Expects a lowercase ASCII word; other input is returned unchanged.
std::string porter_stem(std::string_view word);

struct TokenizerOptions {
    bool remove_stopwords = false;
    bool stem = true;
};

/// Lowercases, splits on anything that is not an ASCII letter/digit (bytes >= 0x80
/// are kept as word characters), optionally drops English stopwords, then stems.
std::vector<std::string> tokenize_and_stem(std::string_view text, const TokenizerOptions& options = {});

bool is_stopword(std::string_view token);

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

}  // namespace enrichkit
