#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace corpusmap::text {

/// Shared analyzer: ASCII-lowercase, split on non-alphanumerics, drop empties.
/// No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view s);

std::string to_lower(std::string_view s);

/// Case-insensitive (ASCII) substring test.
bool contains_icase(std::string_view haystack, std::string_view needle);

std::string trim(std::string_view s);

/// FNV-1a, 64 bit. Stable across platforms.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t v);

/// 30 common English function words, used only for keyword extraction.
bool is_stopword(std::string_view token);

/// Truncates to at most max_chars bytes, ending in "..." when shortened.
std::string truncate_with_ellipsis(std::string_view s, std::size_t max_chars);

}  // namespace corpusmap::text
