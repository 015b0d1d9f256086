#include "corpusmap/lexical_index.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "corpusmap/error.hpp"
#include "corpusmap/text.hpp"

namespace corpusmap::index {

std::string_view to_string(Field f) noexcept
{
    return f == Field::body ? "body" : "title";
}

std::optional<Field> parse_field(std::string_view s) noexcept
{
    if (s == "body") return Field::body;
    if (s == "title") return Field::title;
    return std::nullopt;
}

namespace {

void add_document(FieldIndex& field, std::uint32_t doc, std::string_view content)
{
    std::map<std::string, std::uint32_t, std::less<>> tf;
    std::uint32_t len = 0;
    for (auto& tok : text::tokenize(content)) {
        ++tf[std::move(tok)];
        ++len;
    }
    for (auto& [term, n] : tf) field.postings[term].push_back({doc, n});
    field.doc_lengths.push_back(len);
}

void finish(FieldIndex& field)
{
    double total = 0.0;
    for (auto n : field.doc_lengths) total += n;
    field.avg_doc_length = field.doc_lengths.empty() ? 0.0 : total / static_cast<double>(field.doc_lengths.size());
}

std::vector<std::string> unique_terms(std::string_view query)
{
    auto tokens = text::tokenize(query);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    return tokens;
}

}  // namespace

LexicalIndex LexicalIndex::build(const std::vector<Document>& docs)
{
    LexicalIndex ix;
    ix.doc_ids_.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        ix.doc_ids_.push_back(docs[i].doc_id);
        add_document(ix.body_, static_cast<std::uint32_t>(i), docs[i].body);
        add_document(ix.title_, static_cast<std::uint32_t>(i), docs[i].title);
    }
    finish(ix.body_);
    finish(ix.title_);
    return ix;
}

LexicalIndex LexicalIndex::from_parts(std::vector<std::string> doc_ids, FieldIndex body, FieldIndex title)
{
    auto check = [n = doc_ids.size()](const FieldIndex& f) {
        if (f.doc_lengths.size() != n) fail(ErrorCode::corrupt_snapshot, "lexical index: length table size mismatch");
        std::vector<std::uint64_t> sums(n, 0);
        for (const auto& [term, plist] : f.postings) {
            for (const auto& p : plist) {
                if (p.doc >= n) fail(ErrorCode::corrupt_snapshot, "lexical index: posting out of range");
                sums[p.doc] += p.tf;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (sums[i] != f.doc_lengths[i]) fail(ErrorCode::corrupt_snapshot, "lexical index: postings disagree with lengths");
        }
    };
    check(body);
    check(title);
    LexicalIndex ix;
    ix.doc_ids_ = std::move(doc_ids);
    ix.body_ = std::move(body);
    ix.title_ = std::move(title);
    finish(ix.body_);
    finish(ix.title_);
    return ix;
}

std::size_t LexicalIndex::document_frequency(Field f, std::string_view term) const
{
    const auto& postings = field(f).postings;
    auto it = postings.find(term);
    return it == postings.end() ? 0 : it->second.size();
}

std::vector<SearchHit> bm25_search(const LexicalIndex& ix, std::string_view query, const DocMask* mask,
                                   std::size_t k, Bm25Params params, Field field)
{
    if (k == 0) fail(ErrorCode::invalid_argument, "bm25_search: k must be at least 1");
    const auto terms = unique_terms(query);
    if (terms.empty()) fail(ErrorCode::invalid_argument, "bm25_search: query has no searchable terms");

    const FieldIndex& fx = ix.field(field);
    const double n_docs = static_cast<double>(ix.size());
    std::unordered_map<std::uint32_t, double> scores;
    for (const auto& term : terms) {
        auto it = fx.postings.find(term);
        if (it == fx.postings.end()) continue;
        const double df = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        for (const Posting& p : it->second) {
            if (mask != nullptr && !(*mask)[p.doc]) continue;
            const double tf = p.tf;
            const double norm = 1.0 - params.b + params.b * fx.doc_lengths[p.doc] / fx.avg_doc_length;
            scores[p.doc] += idf * (tf * (params.k1 + 1.0)) / (tf + params.k1 * norm);
        }
    }

    std::vector<SearchHit> hits;
    hits.reserve(scores.size());
    for (const auto& [doc, score] : scores) {
        if (score > 0.0) hits.push_back({ix.doc_ids()[doc], score, 0, field, std::nullopt});
    }
    auto better = [](const SearchHit& a, const SearchHit& b) {
        return ranks_before(a.score, a.doc_id, 0, b.score, b.doc_id, 0);
    };
    if (hits.size() > k) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
        hits.resize(k);
    } else {
        std::sort(hits.begin(), hits.end(), better);
    }
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i + 1;
    return hits;
}

DocMask lexical_matches(const LexicalIndex& ix, std::string_view query, Field field)
{
    DocMask mask(ix.size(), false);
    const FieldIndex& fx = ix.field(field);
    for (const auto& term : unique_terms(query)) {
        auto it = fx.postings.find(term);
        if (it == fx.postings.end()) continue;
        for (const Posting& p : it->second) mask[p.doc] = true;
    }
    return mask;
}

}  // namespace corpusmap::index
