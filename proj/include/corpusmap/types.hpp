#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpusmap/vector_math.hpp"

namespace corpusmap {

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}
    explicit Date(std::chrono::sys_days d) : days_(static_cast<std::int32_t>(d.time_since_epoch().count())) {}

    /// Parses "YYYY-MM-DD"; nullopt if malformed or not a real date.
    static std::optional<Date> parse(std::string_view iso);

    std::int32_t days() const noexcept { return days_; }
    std::chrono::sys_days sys_days() const { return std::chrono::sys_days{std::chrono::days{days_}}; }
    std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{sys_days()}; }
    std::string iso() const;

    Date operator+(int n) const { return Date(days_ + n); }
    int operator-(Date other) const { return days_ - other.days_; }

    auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point2&) const = default;
};

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
    Date pub_date;
    std::string journal;
    std::vector<std::string> authors;
    Embedding embedding;               // empty until embedded
    std::optional<std::string> topic_id;
    std::optional<Point2> coords;
};

struct SentenceChunk {
    std::string doc_id;
    std::uint32_t seq = 0;
    std::string text;
    Embedding embedding;
};

/// Half-open date range [start, end). id is the interval's ordinal counted from
/// the partition anchor.
struct TimeInterval {
    std::int32_t id = 0;
    Date start;
    Date end;

    bool contains(Date d) const { return start <= d && d < end; }
    bool operator==(const TimeInterval&) const = default;
};

struct Keyword {
    std::string term;
    double weight = 0.0;
    bool operator==(const Keyword&) const = default;
};

inline constexpr std::string_view kOutlierTopicId = "outlier";

struct Topic {
    std::string topic_id;
    Vector centroid;
    std::vector<Keyword> keywords;
    std::string label;
    std::string description;
    std::size_t size = 0;
    std::optional<std::string> parent_id;
    int level = 0;
    Point2 coords;
    std::vector<std::int32_t> source_intervals;  // sorted, unique
    bool degraded_label = false;

    bool is_outlier() const { return topic_id == kOutlierTopicId; }
};

enum class QueryMode { lexical, semantic };

std::string_view to_string(QueryMode m) noexcept;
std::optional<QueryMode> parse_query_mode(std::string_view s) noexcept;

struct TextQuery {
    std::string text;
    QueryMode mode = QueryMode::lexical;
    bool operator==(const TextQuery&) const = default;
};

/// Conjunctive query state shared by every endpoint. Absent fields do not
/// constrain; the default-constructed Filter matches everything.
struct Filter {
    std::optional<Date> date_from;
    std::optional<Date> date_to;
    std::optional<std::vector<std::string>> topic_ids;
    std::optional<std::string> title_keyword;
    std::optional<TextQuery> query;

    bool empty() const
    {
        return !date_from && !date_to && !topic_ids && !title_keyword && !query;
    }
    /// Throws invalid_argument if date_from > date_to.
    void validate() const;

    bool operator==(const Filter&) const = default;
};

}  // namespace corpusmap
