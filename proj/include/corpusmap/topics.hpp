#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpusmap/config.hpp"
#include "corpusmap/llm.hpp"
#include "corpusmap/projection.hpp"
#include "corpusmap/types.hpp"

namespace corpusmap::topics {

/// Topics discovered in one time interval. members[i] lists the corpus
/// positions of topics[i]'s documents.
struct IntervalModel {
    TimeInterval interval;
    std::vector<Topic> topics;
    std::vector<std::vector<std::size_t>> members;
    std::vector<std::size_t> outliers;
    atlas::ProjectionTransform reducer;
    bool degenerate = false;
};

/// Reduces the members' embeddings to cfg.reduce_dim dimensions, clusters
/// them by density, and returns leaf topics whose centroids are normalized
/// means of the full-dimensional embeddings. Intervals too small to cluster
/// yield a single catch-all topic flagged degenerate. Keywords and labels are
/// left empty; see describe_topics.
IntervalModel cluster_interval(const TimeInterval& interval, const std::vector<Document>& docs,
                               std::span<const std::size_t> members, const EngineConfig& cfg);

/// Normalized mean of the given documents' embeddings.
Vector centroid_of(const std::vector<Document>& docs, std::span<const std::size_t> members);

using TermCounts = std::map<std::string, std::size_t, std::less<>>;

/// Analyzer tokens of text minus stopwords, counted.
TermCounts keyword_terms(std::string_view text);

/// Class-based tf-idf. Each cluster's documents form one pseudo-document;
/// tf = count / tokens in cluster, idf = ln(1 + C / cf).
class ClassTfidf {
public:
    explicit ClassTfidf(std::vector<TermCounts> clusters);

    std::size_t cluster_count() const noexcept { return clusters_.size(); }
    double weight(std::size_t cluster, std::string_view term) const;
    /// Top n terms of a cluster by (weight desc, term asc).
    std::vector<Keyword> keywords(std::size_t cluster, std::size_t top_n) const;

private:
    std::vector<TermCounts> clusters_;
    std::vector<std::size_t> totals_;
    std::map<std::string, std::size_t, std::less<>> cluster_freq_;
};

/// Term counts of each cluster's pseudo-document (title + body of members).
std::vector<TermCounts> cluster_term_counts(const std::vector<Document>& docs,
                                            const std::vector<std::vector<std::size_t>>& members);

/// Keywords for `topic` against all clusters given.
std::vector<Keyword> ctfidf_keywords(std::size_t topic, const std::vector<TermCounts>& clusters, std::size_t top_n);

struct TopicLabel {
    std::string label;
    std::string description;
    bool degraded = false;
};

inline constexpr std::size_t kMaxLabelChars = 60;
inline constexpr std::size_t kMaxDescriptionChars = 400;

/// Stub rule: label = top three terms joined by " / ", description =
/// "Documents about: " + top ten terms. A remote provider is prompted with the
/// keywords; on failure the stub rule is used and the result marked degraded.
TopicLabel generate_label(const llm::LlmProvider& llm, const std::vector<Keyword>& keywords);

/// Fills keywords, label and description for every topic; topics[i] owns members[i].
void describe_topics(std::vector<Topic>& topics, const std::vector<std::vector<std::size_t>>& members,
                     const std::vector<Document>& docs, const llm::LlmProvider& llm, std::size_t top_n);

}  // namespace corpusmap::topics
