#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "corpusmap/types.hpp"

namespace corpusmap::ingest {

struct CorpusStats {
    std::size_t doc_count = 0;
    std::size_t sentence_count = 0;
    Date min_date;
    Date max_date;
    std::size_t interval_count = 0;
    std::size_t skipped = 0;
    std::size_t duplicates = 0;

    bool operator==(const CorpusStats&) const = default;
};

struct ParsedCorpus {
    std::vector<Document> docs;
    CorpusStats stats;
    std::vector<std::string> diagnostics;  // one line per skipped or duplicate record
};

/// Reads line-delimited JSON records with fields doc_id, title, abstract,
/// pub_date, journal, authors. Malformed lines are skipped; a repeated doc_id
/// replaces the earlier record in place. Throws empty_corpus when nothing valid
/// remains, io when the stream is unreadable.
ParsedCorpus parse_corpus(std::istream& in, int interval_days);
ParsedCorpus parse_corpus_file(const std::string& path, int interval_days);

/// Writes documents back in the same record format (metadata only).
void write_corpus(std::ostream& out, const std::vector<Document>& docs);

/// Rule-based splitter. Boundaries are '.', '!' or '?' followed by whitespace
/// and an uppercase letter or digit, except after a known abbreviation or a
/// single-capital initial. Output joined by single spaces reproduces the
/// whitespace-normalized input.
std::vector<std::string> segment_sentences(std::string_view text);

std::string normalize_whitespace(std::string_view text);

std::vector<SentenceChunk> chunk_documents(const std::vector<Document>& docs);

struct IntervalPartition {
    TimeInterval interval;
    std::vector<std::size_t> members;  // indices into the input document list, input order
};

/// Consecutive half-open intervals of interval_days anchored at the minimum
/// pub_date. Empty intervals are omitted.
std::vector<IntervalPartition> partition_intervals(const std::vector<Document>& docs, int interval_days);

std::size_t interval_count(Date min_date, Date max_date, int interval_days);

}  // namespace corpusmap::ingest
