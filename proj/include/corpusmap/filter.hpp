#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corpusmap/types.hpp"

namespace corpusmap::index {

/// Per-document admission flags, indexed by corpus position.
using DocMask = std::vector<bool>;

/// Child lists of the topic forest, used to expand a selected topic to the
/// leaves beneath it.
class TopicTree {
public:
    TopicTree() = default;
    explicit TopicTree(const std::vector<Topic>& topics);

    /// The selected ids plus every descendant.
    std::unordered_set<std::string> expand(const std::vector<std::string>& ids) const;

private:
    std::unordered_map<std::string, std::vector<std::string>> children_;
};

/// Conjunction of the metadata predicates (date range, inclusive ends; topic
/// selection with descendant expansion; case-insensitive title substring).
/// The free-text query is not a metadata predicate; see the engine for it.
DocMask filter_mask(const std::vector<Document>& docs, const Filter& filter, const TopicTree& tree);

std::set<std::string> apply_filter(const std::vector<Document>& docs, const Filter& filter, const TopicTree& tree);

std::size_t count(const DocMask& mask);
DocMask intersect(DocMask a, const DocMask& b);

enum class Bucket { day, week, month };

std::string_view to_string(Bucket b) noexcept;
std::optional<Bucket> parse_bucket(std::string_view s) noexcept;

/// Start of the bucket containing d. Weeks start on Monday.
Date bucket_start(Date d, Bucket b);
Date next_bucket(Date start, Bucket b);

struct HistogramBin {
    Date start;
    std::size_t count = 0;
    bool operator==(const HistogramBin&) const = default;
};

/// Contiguous buckets from the earliest to the latest admitted date, zero
/// buckets included. Empty when nothing is admitted.
std::vector<HistogramBin> timeline_histogram(const std::vector<Document>& docs, const DocMask& mask, Bucket bucket);

}  // namespace corpusmap::index
