#include "corpusmap/topics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "corpusmap/error.hpp"
#include "corpusmap/hdbscan.hpp"
#include "corpusmap/text.hpp"

namespace corpusmap::topics {

Vector centroid_of(const std::vector<Document>& docs, std::span<const std::size_t> members)
{
    if (members.empty()) fail(ErrorCode::invalid_argument, "centroid_of: no members");
    const std::size_t d = docs[members.front()].embedding.size();
    Vector sum(d, 0.0);
    for (std::size_t m : members) {
        const Embedding& e = docs[m].embedding;
        if (e.size() != d) fail(ErrorCode::invalid_argument, "centroid_of: inconsistent embedding dimensions");
        for (std::size_t j = 0; j < d; ++j) sum[j] += e[j];
    }
    if (l2_norm(std::span<const double>(sum)) == 0.0) {
        // Members cancel out exactly; fall back to the first member's direction.
        return normalize(std::span<const float>(docs[members.front()].embedding));
    }
    return normalize(sum);
}

namespace {

std::string interval_topic_id(std::int32_t interval, std::size_t k)
{
    return "i" + std::to_string(interval) + "." + std::to_string(k);
}

Topic make_leaf(const TimeInterval& interval, std::size_t k, const std::vector<Document>& docs,
                const std::vector<std::size_t>& members)
{
    Topic t;
    t.topic_id = interval_topic_id(interval.id, k);
    t.centroid = centroid_of(docs, members);
    t.size = members.size();
    t.level = 0;
    t.source_intervals = {interval.id};
    return t;
}

}  // namespace

IntervalModel cluster_interval(const TimeInterval& interval, const std::vector<Document>& docs,
                               std::span<const std::size_t> members, const EngineConfig& cfg)
{
    IntervalModel model;
    model.interval = interval;
    if (members.empty()) return model;

    const std::size_t n = members.size();
    const std::size_t required = static_cast<std::size_t>(cfg.min_cluster_size + cfg.min_samples);
    if (n < required || n < static_cast<std::size_t>(cfg.reduce_dim) + 1) {
        model.degenerate = true;
        model.members.emplace_back(members.begin(), members.end());
        model.topics.push_back(make_leaf(interval, 0, docs, model.members.back()));
        return model;
    }

    std::vector<Vector> full;
    full.reserve(n);
    for (std::size_t m : members) full.push_back(to_vector(docs[m].embedding));
    model.reducer = atlas::project_fit(full, cfg.reduce_dim);
    std::vector<Vector> reduced;
    reduced.reserve(n);
    for (const auto& v : full) reduced.push_back(model.reducer.apply(std::span<const double>(v)));

    const DensityClustering dc = density_cluster(reduced, cfg.min_cluster_size, cfg.min_samples);
    model.members.resize(dc.cluster_count);
    for (std::size_t i = 0; i < n; ++i) {
        if (dc.labels[i] < 0) {
            model.outliers.push_back(members[i]);
        } else {
            model.members[static_cast<std::size_t>(dc.labels[i])].push_back(members[i]);
        }
    }
    for (std::size_t k = 0; k < model.members.size(); ++k) {
        model.topics.push_back(make_leaf(interval, k, docs, model.members[k]));
    }

    if (cfg.reassign_outliers && !model.outliers.empty() && !model.topics.empty()) {
        for (std::size_t doc : model.outliers) {
            std::size_t best = 0;
            double best_sim = -2.0;
            for (std::size_t k = 0; k < model.topics.size(); ++k) {
                const double s = cosine_similarity(std::span<const float>(docs[doc].embedding),
                                                   std::span<const double>(model.topics[k].centroid));
                if (s > best_sim) {
                    best_sim = s;
                    best = k;
                }
            }
            model.members[best].push_back(doc);
        }
        model.outliers.clear();
        for (std::size_t k = 0; k < model.topics.size(); ++k) {
            std::sort(model.members[k].begin(), model.members[k].end());
            model.topics[k] = make_leaf(interval, k, docs, model.members[k]);
        }
    }
    return model;
}

TermCounts keyword_terms(std::string_view content)
{
    TermCounts counts;
    for (auto& tok : text::tokenize(content)) {
        if (!text::is_stopword(tok)) ++counts[std::move(tok)];
    }
    return counts;
}

ClassTfidf::ClassTfidf(std::vector<TermCounts> clusters) : clusters_(std::move(clusters))
{
    totals_.reserve(clusters_.size());
    for (const auto& c : clusters_) {
        std::size_t total = 0;
        for (const auto& [term, n] : c) {
            total += n;
            ++cluster_freq_[term];
        }
        totals_.push_back(total);
    }
}

double ClassTfidf::weight(std::size_t cluster, std::string_view term) const
{
    const auto& c = clusters_.at(cluster);
    auto it = c.find(term);
    if (it == c.end() || it->second == 0) return 0.0;
    const double tf = static_cast<double>(it->second) / static_cast<double>(totals_[cluster]);
    const double cf = static_cast<double>(cluster_freq_.find(term)->second);
    return tf * std::log(1.0 + static_cast<double>(clusters_.size()) / cf);
}

std::vector<Keyword> ClassTfidf::keywords(std::size_t cluster, std::size_t top_n) const
{
    std::vector<Keyword> out;
    for (const auto& [term, n] : clusters_.at(cluster)) {
        if (n > 0) out.push_back({term, weight(cluster, term)});
    }
    auto better = [](const Keyword& a, const Keyword& b) {
        return a.weight != b.weight ? a.weight > b.weight : a.term < b.term;
    };
    if (out.size() > top_n) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(top_n), out.end(), better);
        out.resize(top_n);
    } else {
        std::sort(out.begin(), out.end(), better);
    }
    return out;
}

std::vector<TermCounts> cluster_term_counts(const std::vector<Document>& docs,
                                            const std::vector<std::vector<std::size_t>>& members)
{
    std::vector<TermCounts> out;
    out.reserve(members.size());
    for (const auto& group : members) {
        TermCounts counts;
        for (std::size_t m : group) {
            for (auto& [term, n] : keyword_terms(docs[m].title + " " + docs[m].body)) counts[term] += n;
        }
        out.push_back(std::move(counts));
    }
    return out;
}

std::vector<Keyword> ctfidf_keywords(std::size_t topic, const std::vector<TermCounts>& clusters, std::size_t top_n)
{
    return ClassTfidf(clusters).keywords(topic, top_n);
}

namespace {

std::string join_terms(const std::vector<Keyword>& keywords, std::size_t n, std::string_view sep)
{
    std::string out;
    for (std::size_t i = 0; i < keywords.size() && i < n; ++i) {
        if (i > 0) out += sep;
        out += keywords[i].term;
    }
    return out;
}

TopicLabel stub_label(const std::vector<Keyword>& keywords)
{
    TopicLabel l;
    l.label = text::truncate_with_ellipsis(join_terms(keywords, 3, " / "), kMaxLabelChars);
    l.description = text::truncate_with_ellipsis("Documents about: " + join_terms(keywords, 10, ", "),
                                                 kMaxDescriptionChars);
    return l;
}

std::string after_prefix(const std::string& line, std::string_view prefix)
{
    if (line.size() >= prefix.size() && text::to_lower(line.substr(0, prefix.size())) == prefix) {
        return text::trim(line.substr(prefix.size()));
    }
    return {};
}

}  // namespace

TopicLabel generate_label(const llm::LlmProvider& llm, const std::vector<Keyword>& keywords)
{
    if (keywords.empty()) fail(ErrorCode::invalid_argument, "generate_label: no keywords");
    if (llm.kind() == llm::Kind::stub) return stub_label(keywords);

    try {
        const std::string prompt = llm::render(llm::prompts::label, {{"keywords", join_terms(keywords, keywords.size(), ", ")}});
        const std::string reply = llm.complete({{"user", prompt}});
        TopicLabel l;
        std::string first_line;
        std::istringstream lines(reply);
        for (std::string line; std::getline(lines, line);) {
            line = text::trim(line);
            if (line.empty()) continue;
            if (first_line.empty()) first_line = line;
            if (auto v = after_prefix(line, "label:"); !v.empty()) l.label = v;
            if (auto v = after_prefix(line, "description:"); !v.empty()) l.description = v;
        }
        if (l.label.empty()) l.label = first_line;
        if (l.label.empty()) return stub_label(keywords);
        l.label = text::truncate_with_ellipsis(l.label, kMaxLabelChars);
        l.description = text::truncate_with_ellipsis(l.description, kMaxDescriptionChars);
        return l;
    } catch (const Error&) {
        TopicLabel l = stub_label(keywords);
        l.degraded = true;
        return l;
    }
}

void describe_topics(std::vector<Topic>& topics, const std::vector<std::vector<std::size_t>>& members,
                     const std::vector<Document>& docs, const llm::LlmProvider& llm, std::size_t top_n)
{
    if (topics.size() != members.size()) fail(ErrorCode::invalid_argument, "describe_topics: topic/member count mismatch");
    const ClassTfidf tfidf(cluster_term_counts(docs, members));
    for (std::size_t i = 0; i < topics.size(); ++i) {
        topics[i].keywords = tfidf.keywords(i, top_n);
        if (topics[i].keywords.empty()) {
            topics[i].label = "untitled topic";
            topics[i].description = "Documents without indexable terms";
            continue;
        }
        const TopicLabel l = generate_label(llm, topics[i].keywords);
        topics[i].label = l.label;
        topics[i].description = l.description;
        topics[i].degraded_label = l.degraded;
    }
}

}  // namespace corpusmap::topics
