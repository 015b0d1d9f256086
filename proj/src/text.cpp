#include "corpusmap/text.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

namespace corpusmap::text {

namespace {

bool is_alnum(char c)
{
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char lower(char c)
{
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr std::array<std::string_view, 30> kStopwords{
    "a",  "an",   "and",  "are", "as",   "at",    "be",   "by",   "for",  "from",
    "has", "have", "in",  "is",  "it",   "its",   "of",   "on",   "or",   "that",
    "the", "their", "this", "to", "was", "were",  "which", "with", "we",  "these"};

}  // namespace

std::vector<std::string> tokenize(std::string_view s)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_alnum(c)) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool contains_icase(std::string_view haystack, std::string_view needle)
{
    if (needle.empty()) return true;
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                          [](char a, char b) { return lower(a) == lower(b); });
    return it != haystack.end();
}

std::string trim(std::string_view s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed)
{
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed)
{
    return fnv1a64(s.data(), s.size(), seed);
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

bool is_stopword(std::string_view token)
{
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

std::string truncate_with_ellipsis(std::string_view s, std::size_t max_chars)
{
    if (s.size() <= max_chars) return std::string(s);
    if (max_chars <= 3) return std::string(s.substr(0, max_chars));
    std::size_t cut = max_chars - 3;
    // Do not split a UTF-8 sequence.
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut)) + "...";
}

}  // namespace corpusmap::text
