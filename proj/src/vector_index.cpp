#include "corpusmap/vector_index.hpp"

#include <algorithm>
#include <queue>

#include "corpusmap/error.hpp"
#include "corpusmap/vector_math.hpp"

namespace corpusmap::index {

namespace {

std::string key(std::string_view doc_id, std::uint32_t seq)
{
    std::string k(doc_id);
    k += '\x1f';
    k += std::to_string(seq);
    return k;
}

}  // namespace

std::optional<std::size_t> VectorIndex::position(std::string_view doc_id, std::uint32_t seq) const
{
    auto it = keys_.find(key(doc_id, seq));
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

void VectorIndex::add(Entry entry, std::span<const float> vector)
{
    if (static_cast<int>(vector.size()) != dim_) fail(ErrorCode::invalid_argument, "VectorIndex::add: dimension mismatch");
    if (!all_finite(vector)) fail(ErrorCode::invalid_argument, "VectorIndex::add: non-finite component");
    const double n = l2_norm(vector);
    if (n == 0.0) fail(ErrorCode::invalid_argument, "VectorIndex::add: zero vector");
    if (!keys_.emplace(key(entry.doc_id, entry.seq), entries_.size()).second) {
        fail(ErrorCode::invalid_argument, "VectorIndex::add: duplicate entry " + entry.doc_id);
    }
    entries_.push_back(std::move(entry));
    data_.insert(data_.end(), vector.begin(), vector.end());
    norms_.push_back(n);
}

std::vector<SearchHit> VectorIndex::search(std::span<const double> query, const DocMask* mask, std::size_t k) const
{
    if (static_cast<int>(query.size()) != dim_) fail(ErrorCode::invalid_argument, "vector_search: dimension mismatch");
    if (k == 0) fail(ErrorCode::invalid_argument, "vector_search: k must be at least 1");
    const double qn = l2_norm(query);
    if (qn == 0.0) fail(ErrorCode::invalid_argument, "vector_search: zero query vector");

    struct Candidate {
        double score;
        std::size_t entry;
    };
    auto better = [this](const Candidate& a, const Candidate& b) {
        const Entry& ea = entries_[a.entry];
        const Entry& eb = entries_[b.entry];
        return ranks_before(a.score, ea.doc_id, ea.seq, b.score, eb.doc_id, eb.seq);
    };
    // Max-heap on "worse", so top() is the weakest kept candidate.
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(better)> heap(better);

    const std::size_t d = static_cast<std::size_t>(dim_);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (mask != nullptr && !(*mask)[entries_[i].doc_number]) continue;
        const float* r = data_.data() + i * d;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(r[j]) * query[j];
        const Candidate c{s / (qn * norms_[i]), i};
        if (heap.size() < k) {
            heap.push(c);
        } else if (better(c, heap.top())) {
            heap.pop();
            heap.push(c);
        }
    }

    std::vector<SearchHit> hits(heap.size());
    for (std::size_t i = hits.size(); i-- > 0;) {
        const Candidate c = heap.top();
        heap.pop();
        const Entry& e = entries_[c.entry];
        hits[i] = SearchHit{e.doc_id, c.score, i + 1, Field::body, e.seq};
    }
    return hits;
}

}  // namespace corpusmap::index
