#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corpusmap/filter.hpp"
#include "corpusmap/llm.hpp"
#include "corpusmap/types.hpp"
#include "corpusmap/vector_index.hpp"

namespace corpusmap::qa {

enum class Mode { corpus, document };

std::string_view to_string(Mode m) noexcept;
std::optional<Mode> parse_mode(std::string_view s) noexcept;

/// One piece of evidence: a retrieved sentence (document mode) or a topic
/// summary (corpus mode).
struct Context {
    std::string source_id;             // doc_id or topic_id
    std::optional<std::uint32_t> seq;  // sentence position, document mode only
    std::string text;
    double score = 0.0;

    bool operator==(const Context&) const = default;
};

struct Answer {
    std::string text;
    Mode mode = Mode::document;
    std::vector<std::string> citations;
    std::vector<Context> contexts;
    bool degraded = false;

    bool operator==(const Answer&) const = default;
};

/// Dimension of the hash embeddings used to compare labels with queries.
inline constexpr int kLabelHashDim = 256;
/// Unmatched labels returned by a remote model resolve to the nearest known
/// label only when the cosine reaches this value.
inline constexpr double kLabelMatchThreshold = 0.5;

struct Route {
    std::vector<std::string> topic_ids;
    bool degraded = false;
};

/// Picks the topics a corpus-level question is about. labels is a list of
/// (topic_id, label). Stub: every label occurring in the query (ASCII case
/// insensitive); if none does, the single label whose hash embedding is
/// closest to the query's. Remote: the model lists labels, matched after trim.
/// Throws invalid_argument when labels is empty.
Route route_corpus_query(const llm::LlmProvider& llm, std::string_view query,
                         const std::vector<std::pair<std::string, std::string>>& labels);

/// Number of keywords per topic in stub corpus answers.
inline constexpr std::size_t kCorpusAnswerKeywords = 5;
/// Number of contexts concatenated by the stub document answerer.
inline constexpr std::size_t kStubDocumentContexts = 3;

/// Summarizes the given topics. Stub: one "<label>: <kw1>, ..., <kw5>" line
/// per topic. Throws no_route when topics is empty.
Answer answer_corpus(const llm::LlmProvider& llm, std::string_view query, const std::vector<const Topic*>& topics);

/// The k sentences closest to query_vec among those whose document passes
/// mask. sentences[i] must describe row i of vix. Throws empty_context when no
/// sentence passes.
std::vector<Context> retrieve_sentences(const index::VectorIndex& vix, const std::vector<SentenceChunk>& sentences,
                                        std::span<const double> query_vec, const index::DocMask* mask,
                                        std::size_t k);

/// Attributed answer from ranked sentence contexts. Stub: the first three
/// contexts, each followed by " [doc_id]", joined by spaces. Throws
/// invalid_argument when contexts is empty.
Answer answer_document(const llm::LlmProvider& llm, std::string_view query, std::vector<Context> contexts);

}  // namespace corpusmap::qa
