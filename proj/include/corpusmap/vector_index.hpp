#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <optional>
#include <unordered_map>
#include <vector>

#include "corpusmap/filter.hpp"
#include "corpusmap/search_hit.hpp"

namespace corpusmap::index {

/// Exact (brute-force) cosine index. Rows are stored as 32-bit floats in one
/// contiguous buffer; scoring runs in double precision.
class VectorIndex {
public:
    struct Entry {
        std::string doc_id;
        std::uint32_t seq = 0;        // sentence position; 0 for document entries
        std::uint32_t doc_number = 0;  // corpus position of the parent document
        bool operator==(const Entry&) const = default;
    };

    VectorIndex() = default;
    explicit VectorIndex(int dim) : dim_(dim) {}

    /// Throws invalid_argument on dimension mismatch, non-finite or zero
    /// vectors, or a repeated (doc_id, seq).
    void add(Entry entry, std::span<const float> vector);

    int dimension() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::span<const float> row(std::size_t i) const
    {
        return {data_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    const std::vector<float>& data() const noexcept { return data_; }
    /// Row of the entry (doc_id, seq), if present.
    std::optional<std::size_t> position(std::string_view doc_id, std::uint32_t seq) const;

    /// Top-k entries by cosine similarity with query, restricted to entries
    /// whose parent document is admitted by mask (when given). Ties are broken
    /// by (doc_id, seq) ascending.
    std::vector<SearchHit> search(std::span<const double> query, const DocMask* mask, std::size_t k) const;

    bool operator==(const VectorIndex&) const = default;

private:
    int dim_ = 0;
    std::vector<Entry> entries_;
    std::vector<float> data_;
    std::vector<double> norms_;
    std::unordered_map<std::string, std::size_t> keys_;
};

}  // namespace corpusmap::index
