#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corpusmap/types.hpp"

namespace corpusmap::synthetic {

struct CorpusOptions {
    std::size_t doc_count = 2000;
    std::size_t theme_count = 6;
    int span_days = 90;
    Date first_day = Date(19723);  // 2024-01-01
    int min_sentences = 3;
    int max_sentences = 7;
    std::uint64_t seed = 42;
};

struct Corpus {
    std::vector<Document> docs;
    std::vector<std::size_t> theme;            // per document
    std::vector<std::string> theme_names;      // per theme
};

/// Seeded corpus of abstracts. Each document draws most of its words from one
/// theme's vocabulary, the rest from a shared filler list; dates are uniform
/// over span_days. Identical options give identical corpora.
Corpus make_corpus(const CorpusOptions& opts);

}  // namespace corpusmap::synthetic
