#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "corpusmap/filter.hpp"
#include "corpusmap/search_hit.hpp"
#include "corpusmap/types.hpp"

namespace corpusmap::index {

struct Posting {
    std::uint32_t doc = 0;  // position in the indexed document list
    std::uint32_t tf = 0;
    bool operator==(const Posting&) const = default;
};

struct FieldIndex {
    std::map<std::string, std::vector<Posting>, std::less<>> postings;  // postings sorted by doc
    std::vector<std::uint32_t> doc_lengths;
    double avg_doc_length = 0.0;

    bool operator==(const FieldIndex&) const = default;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Inverted index over the body and title fields of a document list.
class LexicalIndex {
public:
    LexicalIndex() = default;
    static LexicalIndex build(const std::vector<Document>& docs);
    /// Reassembles an index from persisted parts; validates internal consistency.
    static LexicalIndex from_parts(std::vector<std::string> doc_ids, FieldIndex body, FieldIndex title);

    std::size_t size() const noexcept { return doc_ids_.size(); }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const FieldIndex& field(Field f) const noexcept { return f == Field::body ? body_ : title_; }

    /// Number of documents containing term in the field.
    std::size_t document_frequency(Field f, std::string_view term) const;

    bool operator==(const LexicalIndex&) const = default;

private:
    std::vector<std::string> doc_ids_;
    FieldIndex body_;
    FieldIndex title_;
};

/// Okapi BM25 with the non-negative idf ln(1 + (N - df + 0.5) / (df + 0.5)).
/// Query terms are de-duplicated. Documents outside mask (when given) and
/// documents scoring zero are excluded. Throws invalid_argument for a query
/// with no tokens or k == 0.
std::vector<SearchHit> bm25_search(const LexicalIndex& ix, std::string_view query, const DocMask* mask,
                                   std::size_t k, Bm25Params params, Field field = Field::body);

/// Documents containing at least one query term in the field.
DocMask lexical_matches(const LexicalIndex& ix, std::string_view query, Field field = Field::body);

}  // namespace corpusmap::index
