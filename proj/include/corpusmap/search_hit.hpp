#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace corpusmap::index {

enum class Field { body, title };

std::string_view to_string(Field f) noexcept;
std::optional<Field> parse_field(std::string_view s) noexcept;

struct SearchHit {
    std::string doc_id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
    Field matched_field = Field::body;
    std::optional<std::uint32_t> seq;  // set for sentence hits

    bool operator==(const SearchHit&) const = default;
};

/// Ordering used everywhere: score descending, then doc_id, then seq ascending.
inline bool ranks_before(double sa, std::string_view ida, std::uint32_t seqa, double sb, std::string_view idb,
                         std::uint32_t seqb)
{
    if (sa != sb) return sa > sb;
    if (ida != idb) return ida < idb;
    return seqa < seqb;
}

}  // namespace corpusmap::index
