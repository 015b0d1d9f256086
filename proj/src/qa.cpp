#include "corpusmap/qa.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "corpusmap/embed.hpp"
#include "corpusmap/error.hpp"
#include "corpusmap/text.hpp"

namespace corpusmap::qa {

std::string_view to_string(Mode m) noexcept
{
    return m == Mode::corpus ? "corpus" : "document";
}

std::optional<Mode> parse_mode(std::string_view s) noexcept
{
    if (s == "corpus") return Mode::corpus;
    if (s == "document") return Mode::document;
    return std::nullopt;
}

namespace {

using LabelList = std::vector<std::pair<std::string, std::string>>;

std::size_t nearest_label(std::string_view text, const LabelList& labels, double* similarity)
{
    const Vector q = embed::hash_embed(text, kLabelHashDim);
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double s = dot(std::span<const double>(q), std::span<const double>(embed::hash_embed(labels[i].second, kLabelHashDim)));
        if (s > best_sim) {
            best_sim = s;
            best = i;
        }
    }
    if (similarity != nullptr) *similarity = best_sim;
    return best;
}

std::vector<std::string> stub_route(std::string_view query, const LabelList& labels)
{
    std::vector<std::string> out;
    for (const auto& [id, label] : labels) {
        if (!label.empty() && text::contains_icase(query, label)) out.push_back(id);
    }
    if (out.empty()) out.push_back(labels[nearest_label(query, labels, nullptr)].first);
    return out;
}

std::string strip_list_marker(std::string line)
{
    line = text::trim(line);
    if (line.size() >= 2 && (line[0] == '-' || line[0] == '*') && line[1] == ' ') line = text::trim(line.substr(2));
    return line;
}

std::vector<std::string> parse_routed_labels(const std::string& reply, const LabelList& labels)
{
    std::vector<bool> chosen(labels.size(), false);
    std::istringstream in(reply);
    for (std::string line; std::getline(in, line);) {
        line = strip_list_marker(line);
        if (line.empty()) continue;
        bool matched = false;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i].second == line) {
                chosen[i] = true;
                matched = true;
            }
        }
        if (matched) continue;
        double sim = 0.0;
        const std::size_t near = nearest_label(line, labels, &sim);
        if (sim >= kLabelMatchThreshold) chosen[near] = true;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (chosen[i]) out.push_back(labels[i].first);
    }
    return out;
}

std::string join_keywords(const Topic& t, std::size_t n)
{
    std::string out;
    for (std::size_t i = 0; i < t.keywords.size() && i < n; ++i) {
        if (i > 0) out += ", ";
        out += t.keywords[i].term;
    }
    return out;
}

std::string stub_document_text(const std::vector<Context>& contexts)
{
    std::string out;
    for (std::size_t i = 0; i < contexts.size() && i < kStubDocumentContexts; ++i) {
        if (i > 0) out += ' ';
        out += contexts[i].text + " [" + contexts[i].source_id + "]";
    }
    return out;
}

std::vector<std::string> unique_sources(const std::vector<Context>& contexts, std::size_t limit)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < contexts.size() && i < limit; ++i) {
        if (std::find(out.begin(), out.end(), contexts[i].source_id) == out.end()) out.push_back(contexts[i].source_id);
    }
    return out;
}

// Context numbers referenced as [n] (1-based), in order of first appearance.
std::vector<std::size_t> cited_numbers(const std::string& reply, std::size_t count)
{
    std::vector<std::size_t> out;
    for (std::size_t pos = reply.find('['); pos != std::string::npos; pos = reply.find('[', pos + 1)) {
        std::size_t end = pos + 1;
        std::size_t n = 0;
        while (end < reply.size() && end - pos <= 6 && reply[end] >= '0' && reply[end] <= '9') {
            n = n * 10 + static_cast<std::size_t>(reply[end] - '0');
            ++end;
        }
        if (end == pos + 1 || end >= reply.size() || reply[end] != ']') continue;
        if (n >= 1 && n <= count && std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    }
    return out;
}

}  // namespace

Route route_corpus_query(const llm::LlmProvider& llm, std::string_view query, const LabelList& labels)
{
    if (labels.empty()) fail(ErrorCode::invalid_argument, "route_corpus_query: no topic labels");
    if (llm.kind() == llm::Kind::stub) return {stub_route(query, labels), false};

    try {
        std::string listing;
        for (const auto& [id, label] : labels) listing += label + "\n";
        const std::string prompt =
            llm::render(llm::prompts::route, {{"labels", listing}, {"query", std::string(query)}});
        Route r{parse_routed_labels(llm.complete({{"user", prompt}}), labels), false};
        if (r.topic_ids.empty()) r.topic_ids.push_back(labels[nearest_label(query, labels, nullptr)].first);
        return r;
    } catch (const Error&) {
        return {stub_route(query, labels), true};
    }
}

Answer answer_corpus(const llm::LlmProvider& llm, std::string_view query, const std::vector<const Topic*>& topics)
{
    if (topics.empty()) fail(ErrorCode::no_route, "no topic matches the question");
    Answer a;
    a.mode = Mode::corpus;
    std::string stub;
    for (const Topic* t : topics) {
        a.citations.push_back(t->topic_id);
        a.contexts.push_back({t->topic_id, std::nullopt,
                              t->label + ": " + join_keywords(*t, t->keywords.size()) + ". " + t->description, 1.0});
        if (!stub.empty()) stub += '\n';
        stub += t->label + ": " + join_keywords(*t, kCorpusAnswerKeywords);
    }
    if (llm.kind() == llm::Kind::stub) {
        a.text = std::move(stub);
        return a;
    }
    try {
        std::string blocks;
        for (const Context& c : a.contexts) blocks += "- " + c.text + "\n";
        a.text = llm.complete(
            {{"user", llm::render(llm::prompts::corpus_answer, {{"contexts", blocks}, {"query", std::string(query)}})}});
    } catch (const Error&) {
        a.text = std::move(stub);
        a.degraded = true;
    }
    return a;
}

std::vector<Context> retrieve_sentences(const index::VectorIndex& vix, const std::vector<SentenceChunk>& sentences,
                                        std::span<const double> query_vec, const index::DocMask* mask, std::size_t k)
{
    if (sentences.size() != vix.size()) fail(ErrorCode::invalid_argument, "retrieve_sentences: index/sentence mismatch");
    const auto hits = vix.search(query_vec, mask, k);
    if (hits.empty()) fail(ErrorCode::empty_context, "no sentence passes the filter; widen the filter");
    std::vector<Context> out;
    out.reserve(hits.size());
    for (const auto& h : hits) {
        const auto row = vix.position(h.doc_id, h.seq.value_or(0));
        out.push_back({h.doc_id, h.seq, sentences[*row].text, h.score});
    }
    return out;
}

Answer answer_document(const llm::LlmProvider& llm, std::string_view query, std::vector<Context> contexts)
{
    if (contexts.empty()) fail(ErrorCode::invalid_argument, "answer_document: no contexts");
    Answer a;
    a.mode = Mode::document;
    a.contexts = std::move(contexts);
    if (llm.kind() == llm::Kind::stub) {
        a.text = stub_document_text(a.contexts);
        a.citations = unique_sources(a.contexts, kStubDocumentContexts);
        return a;
    }
    try {
        std::string numbered;
        for (std::size_t i = 0; i < a.contexts.size(); ++i) {
            numbered += "[" + std::to_string(i + 1) + "] " + a.contexts[i].text + "\n";
        }
        a.text = llm.complete(
            {{"user", llm::render(llm::prompts::document_answer, {{"contexts", numbered}, {"query", std::string(query)}})}});
        for (std::size_t n : cited_numbers(a.text, a.contexts.size())) {
            const std::string& id = a.contexts[n - 1].source_id;
            if (std::find(a.citations.begin(), a.citations.end(), id) == a.citations.end()) a.citations.push_back(id);
        }
        if (a.citations.empty()) a.citations.push_back(a.contexts.front().source_id);
    } catch (const Error&) {
        a.text = stub_document_text(a.contexts);
        a.citations = unique_sources(a.contexts, kStubDocumentContexts);
        a.degraded = true;
    }
    return a;
}

}  // namespace corpusmap::qa
