#include "enrichkit/text.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <cstdio>
#include <string>
#include <unordered_set>

namespace enrichkit {
namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0;
}

// Lucene's default English stop set.
const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> words{
        "a",    "an",   "and",  "are",   "as",   "at",    "be",    "but",  "by",   "for",  "if",
        "in",   "into", "is",   "it",    "no",   "not",   "of",    "on",   "or",   "such", "that",
        "the",  "their", "then", "there", "these", "they", "this", "to",   "was",  "will", "with"};
    return words;
}

}  // namespace

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) i++;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) i++;
        if (i > start) words.emplace_back(text.substr(start, i - start));
    }
    return words;
}

std::string join_words(const std::vector<std::string>& words, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end && i < words.size(); i++) {
        if (i > begin) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::string truncate_words(std::string_view text, std::size_t max_words) {
    auto words = split_words(text);
    return join_words(words, 0, std::min(max_words, words.size()));
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

bool is_stopword(std::string_view token) {
    return stopwords().contains(token);
}

std::vector<std::string> tokenize_and_stem(std::string_view text, const TokenizerOptions& options) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_char(text[i])) i++;
        std::size_t start = i;
        while (i < text.size() && is_word_char(text[i])) i++;
        if (i == start) continue;
        std::string token = to_lower_ascii(text.substr(start, i - start));
        if (options.remove_stopwords && is_stopword(token)) continue;
        tokens.push_back(options.stem ? porter_stem(token) : std::move(token));
    }
    return tokens;
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; i++) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

}  // namespace enrichkit
