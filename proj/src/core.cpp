#include <charconv>
#include <cstdio>

#include "corpusmap/error.hpp"
#include "corpusmap/types.hpp"

namespace corpusmap {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::empty_corpus: return "empty_corpus";
    case ErrorCode::provider_unavailable: return "provider_unavailable";
    case ErrorCode::incompatible_snapshot: return "incompatible_snapshot";
    case ErrorCode::corrupt_snapshot: return "corrupt_snapshot";
    case ErrorCode::empty_context: return "empty_context";
    case ErrorCode::no_route: return "no_route";
    case ErrorCode::not_found: return "not_found";
    }
    return "unknown";
}

namespace {

bool parse_int(std::string_view s, int& out)
{
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::optional<Date> Date::parse(std::string_view iso)
{
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!parse_int(iso.substr(0, 4), y) || !parse_int(iso.substr(5, 2), m) ||
        !parse_int(iso.substr(8, 2), d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date(std::chrono::sys_days{ymd});
}

std::string Date::iso() const
{
    const auto ymd = this->ymd();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string_view to_string(QueryMode m) noexcept
{
    return m == QueryMode::lexical ? "lexical" : "semantic";
}

std::optional<QueryMode> parse_query_mode(std::string_view s) noexcept
{
    if (s == "lexical") return QueryMode::lexical;
    if (s == "semantic") return QueryMode::semantic;
    return std::nullopt;
}

void Filter::validate() const
{
    if (date_from && date_to && *date_from > *date_to) {
        fail(ErrorCode::invalid_argument, "filter: date_from is after date_to");
    }
    if (query && query->text.empty()) {
        fail(ErrorCode::invalid_argument, "filter: query text is empty");
    }
}

}  // namespace corpusmap
