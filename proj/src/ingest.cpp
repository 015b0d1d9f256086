#include "corpusmap/ingest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "corpusmap/error.hpp"

namespace corpusmap::ingest {

namespace {

constexpr std::array<std::string_view, 11> kAbbreviations{
    "Dr", "Mr", "Mrs", "Ms", "Prof", "Fig", "e.g", "i.e", "vs", "approx", "No"};

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Word immediately preceding position `end` (exclusive), without leading
// punctuation such as '(' or quotes.
std::string_view word_before(std::string_view s, std::size_t end)
{
    std::size_t b = s.rfind(' ', end == 0 ? 0 : end - 1);
    b = (b == std::string_view::npos) ? 0 : b + 1;
    std::string_view w = s.substr(b, end - b);
    while (!w.empty() && (w.front() == '(' || w.front() == '[' || w.front() == '"' || w.front() == '\'')) {
        w.remove_prefix(1);
    }
    return w;
}

bool is_abbreviation(std::string_view s, std::size_t period_pos)
{
    const std::string_view w = word_before(s, period_pos);
    if (w.size() == 1 && is_upper(w[0])) return true;
    if (std::find(kAbbreviations.begin(), kAbbreviations.end(), w) != kAbbreviations.end()) return true;
    if (w == "al") {
        const std::size_t wstart = period_pos - w.size();
        if (wstart >= 1 && word_before(s, wstart - 1) == "et") return true;
    }
    return false;
}

std::optional<Document> parse_record(const nlohmann::json& j, std::string& why)
{
    if (!j.is_object()) {
        why = "record is not an object";
        return std::nullopt;
    }
    auto str = [&](const char* key, std::string& out) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            why = std::string("missing or non-string field '") + key + "'";
            return false;
        }
        out = it->get<std::string>();
        return true;
    };
    Document d;
    std::string date;
    if (!str("doc_id", d.doc_id) || !str("title", d.title) || !str("abstract", d.body) ||
        !str("pub_date", date) || !str("journal", d.journal)) {
        return std::nullopt;
    }
    if (d.doc_id.empty()) {
        why = "empty doc_id";
        return std::nullopt;
    }
    auto parsed = Date::parse(date);
    if (!parsed) {
        why = "invalid pub_date '" + date + "'";
        return std::nullopt;
    }
    d.pub_date = *parsed;
    auto authors = j.find("authors");
    if (authors == j.end() || !authors->is_array()) {
        why = "missing or non-array field 'authors'";
        return std::nullopt;
    }
    for (const auto& a : *authors) {
        if (!a.is_string()) {
            why = "non-string author";
            return std::nullopt;
        }
        d.authors.push_back(a.get<std::string>());
    }
    return d;
}

}  // namespace

std::string normalize_whitespace(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::vector<std::string> segment_sentences(std::string_view text)
{
    const std::string s = normalize_whitespace(text);
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 2 < s.size(); ++i) {
        const char c = s[i];
        if (c != '.' && c != '!' && c != '?') continue;
        if (s[i + 1] != ' ' || !(is_upper(s[i + 2]) || is_digit(s[i + 2]))) continue;
        if (c == '.' && is_abbreviation(s, i)) continue;
        out.push_back(s.substr(start, i + 1 - start));
        start = i + 2;
    }
    if (start < s.size()) out.push_back(s.substr(start));
    return out;
}

std::size_t interval_count(Date min_date, Date max_date, int interval_days)
{
    const long span = static_cast<long>(max_date - min_date) + 1;
    return static_cast<std::size_t>((span + interval_days - 1) / interval_days);
}

ParsedCorpus parse_corpus(std::istream& in, int interval_days)
{
    if (!in) fail(ErrorCode::io, "corpus stream is not readable");
    if (interval_days < 1) fail(ErrorCode::invalid_argument, "interval_days must be positive");

    ParsedCorpus result;
    std::unordered_map<std::string, std::size_t> position;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize_whitespace(line).empty()) continue;
        std::string why;
        std::optional<Document> doc;
        try {
            doc = parse_record(nlohmann::json::parse(line), why);
        } catch (const nlohmann::json::parse_error&) {
            why = "not valid JSON";
        }
        if (!doc) {
            ++result.stats.skipped;
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": skipped: " + why);
            continue;
        }
        auto [it, inserted] = position.try_emplace(doc->doc_id, result.docs.size());
        if (inserted) {
            result.docs.push_back(std::move(*doc));
        } else {
            ++result.stats.duplicates;
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": duplicate doc_id '" +
                                         doc->doc_id + "' replaces earlier record");
            result.docs[it->second] = std::move(*doc);
        }
    }
    if (in.bad()) fail(ErrorCode::io, "error while reading corpus stream");
    if (result.docs.empty()) fail(ErrorCode::empty_corpus, "corpus contains no valid records");

    auto& st = result.stats;
    st.doc_count = result.docs.size();
    st.min_date = result.docs.front().pub_date;
    st.max_date = result.docs.front().pub_date;
    for (const auto& d : result.docs) {
        st.min_date = std::min(st.min_date, d.pub_date);
        st.max_date = std::max(st.max_date, d.pub_date);
        st.sentence_count += segment_sentences(d.body).size();
    }
    st.interval_count = interval_count(st.min_date, st.max_date, interval_days);
    return result;
}

ParsedCorpus parse_corpus_file(const std::string& path, int interval_days)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open corpus file", path);
    return parse_corpus(in, interval_days);
}

void write_corpus(std::ostream& out, const std::vector<Document>& docs)
{
    for (const auto& d : docs) {
        nlohmann::json j{{"doc_id", d.doc_id},        {"title", d.title},     {"abstract", d.body},
                         {"pub_date", d.pub_date.iso()}, {"journal", d.journal}, {"authors", d.authors}};
        out << j.dump() << '\n';
    }
}

std::vector<SentenceChunk> chunk_documents(const std::vector<Document>& docs)
{
    std::vector<SentenceChunk> chunks;
    for (const auto& d : docs) {
        std::uint32_t seq = 0;
        for (auto& s : segment_sentences(d.body)) {
            chunks.push_back(SentenceChunk{d.doc_id, seq++, std::move(s), {}});
        }
    }
    return chunks;
}

std::vector<IntervalPartition> partition_intervals(const std::vector<Document>& docs, int interval_days)
{
    if (interval_days < 1) fail(ErrorCode::invalid_argument, "interval_days must be positive");
    if (docs.empty()) return {};
    Date anchor = docs.front().pub_date;
    for (const auto& d : docs) anchor = std::min(anchor, d.pub_date);

    std::vector<IntervalPartition> buckets;
    std::unordered_map<std::int32_t, std::size_t> slot;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const std::int32_t k = (docs[i].pub_date - anchor) / interval_days;
        auto [it, inserted] = slot.try_emplace(k, buckets.size());
        if (inserted) {
            const Date start = anchor + k * interval_days;
            buckets.push_back({TimeInterval{k, start, start + interval_days}, {}});
        }
        buckets[it->second].members.push_back(i);
    }
    std::sort(buckets.begin(), buckets.end(),
              [](const auto& a, const auto& b) { return a.interval.id < b.interval.id; });
    return buckets;
}

}  // namespace corpusmap::ingest
