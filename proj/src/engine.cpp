#include "corpusmap/engine.hpp"

#include <algorithm>

#include "corpusmap/error.hpp"
#include "corpusmap/lexical_index.hpp"
#include "corpusmap/text.hpp"

namespace corpusmap::engine {

Engine::Engine(index::Snapshot snapshot, std::unique_ptr<embed::EmbeddingProvider> embedder,
               std::unique_ptr<llm::LlmProvider> llm)
    : snap_(std::move(snapshot)), embedder_(std::move(embedder)), llm_(std::move(llm)), tree_(snap_.atlas.topics)
{
    if (!embedder_ || !llm_) fail(ErrorCode::invalid_argument, "Engine: providers are required");
    if (embedder_->dimension() != snap_.doc_vectors.dimension()) {
        fail(ErrorCode::invalid_argument, "Engine: embedding provider dimension differs from the snapshot's");
    }
    for (std::size_t i = 0; i < snap_.docs.size(); ++i) doc_pos_[snap_.docs[i].doc_id] = i;
    for (std::size_t i = 0; i < snap_.atlas.topics.size(); ++i) topic_pos_[snap_.atlas.topics[i].topic_id] = i;
}

std::shared_ptr<const Engine> Engine::open(const std::filesystem::path& snapshot_dir)
{
    index::Snapshot snap = index::load_snapshot(snapshot_dir);
    EngineConfig cfg = snap.config;
    apply_env_overrides(cfg);
    auto embedder = embed::make_provider(cfg);
    auto llm = llm::make_llm(cfg);
    return std::make_shared<const Engine>(std::move(snap), std::move(embedder), std::move(llm));
}

const Document* Engine::document(std::string_view doc_id) const
{
    auto it = doc_pos_.find(std::string(doc_id));
    return it == doc_pos_.end() ? nullptr : &snap_.docs[it->second];
}

const Topic* Engine::topic(std::string_view topic_id) const
{
    auto it = topic_pos_.find(std::string(topic_id));
    return it == topic_pos_.end() ? nullptr : &snap_.atlas.topics[it->second];
}

Vector Engine::embed_query(const std::string& text) const
{
    const std::string one[] = {text};
    return embedder_->embed(one).at(0);
}

index::DocMask Engine::resolve(const Filter& filter) const
{
    index::DocMask mask = index::filter_mask(snap_.docs, filter, tree_);
    if (!filter.query) return mask;
    const TextQuery& q = *filter.query;
    if (q.mode == QueryMode::lexical) {
        if (text::tokenize(q.text).empty()) fail(ErrorCode::invalid_argument, "filter query has no searchable terms");
        return index::intersect(std::move(mask), index::lexical_matches(snap_.lexical, q.text, index::Field::body));
    }
    const Vector qv = embed_query(q.text);
    index::DocMask admitted(snap_.docs.size(), false);
    for (const auto& hit : snap_.doc_vectors.search(qv, &mask, static_cast<std::size_t>(snap_.config.semantic_filter_k))) {
        admitted[doc_pos_.at(hit.doc_id)] = true;
    }
    return admitted;
}

std::vector<index::SearchHit> Engine::search(const SearchRequest& req) const
{
    if (text::trim(req.q).empty()) fail(ErrorCode::invalid_argument, "search query is empty");
    if (req.k == 0) fail(ErrorCode::invalid_argument, "k must be at least 1");
    if (req.mode == QueryMode::semantic && req.field != index::Field::body) {
        fail(ErrorCode::invalid_argument, "semantic search is only available on the abstract (field=body)");
    }
    const index::DocMask mask = resolve(req.filter);
    const std::size_t want = req.k + req.offset;
    std::vector<index::SearchHit> hits;
    if (req.mode == QueryMode::lexical) {
        hits = index::bm25_search(snap_.lexical, req.q, &mask, want, {snap_.config.bm25_k1, snap_.config.bm25_b},
                                  req.field);
    } else {
        hits = snap_.doc_vectors.search(embed_query(req.q), &mask, want);
        for (auto& h : hits) h.seq.reset();
    }
    if (req.offset >= hits.size()) return {};
    hits.erase(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(req.offset));
    return hits;
}

MapView Engine::map(const Filter& filter) const
{
    const index::DocMask mask = resolve(filter);
    MapView view;
    for (std::size_t i = 0; i < snap_.docs.size(); ++i) {
        if (!mask[i]) continue;
        ++view.total;
        if (view.points.size() >= snap_.config.map_point_cap) {
            view.truncated = true;
            continue;
        }
        const Point2& p = snap_.atlas.doc_coords[i];
        view.points.push_back({snap_.docs[i].doc_id, p.x, p.y, snap_.atlas.doc_assignments[i]});
    }
    return view;
}

std::vector<index::HistogramBin> Engine::timeline(const Filter& filter, index::Bucket bucket) const
{
    return index::timeline_histogram(snap_.docs, resolve(filter), bucket);
}

qa::Answer Engine::ask(const QaRequest& req) const
{
    if (text::trim(req.query).empty()) fail(ErrorCode::invalid_argument, "question is empty");

    if (req.mode == qa::Mode::corpus) {
        std::vector<const Topic*> chosen;
        bool routed_degraded = false;
        if (req.topic_ids) {
            for (const auto& id : *req.topic_ids) {
                const Topic* t = topic(id);
                if (t == nullptr) fail(ErrorCode::not_found, "unknown topic id: " + id);
                chosen.push_back(t);
            }
        } else {
            std::vector<std::pair<std::string, std::string>> labels;
            for (const auto& t : snap_.atlas.topics) {
                if (t.level == 0 && !t.is_outlier()) labels.emplace_back(t.topic_id, t.label);
            }
            if (labels.empty()) fail(ErrorCode::no_route, "the snapshot has no topics to route to");
            const qa::Route route = qa::route_corpus_query(*llm_, req.query, labels);
            routed_degraded = route.degraded;
            for (const auto& id : route.topic_ids) chosen.push_back(topic(id));
        }
        qa::Answer a = qa::answer_corpus(*llm_, req.query, chosen);
        a.degraded = a.degraded || routed_degraded;
        return a;
    }

    const index::DocMask mask = resolve(req.filter);
    if (index::count(mask) == 0) fail(ErrorCode::empty_context, "no document matches the filter; widen the filter");
    auto contexts = qa::retrieve_sentences(snap_.sentence_vectors, snap_.sentences, embed_query(req.query), &mask,
                                           static_cast<std::size_t>(snap_.config.top_k_sentences));
    return qa::answer_document(*llm_, req.query, std::move(contexts));
}

Health Engine::health() const
{
    return {snap_.snapshot_id, snap_.docs.size(), snap_.sentences.size(), snap_.atlas.topics.size(),
            snap_.intervals.size()};
}

std::shared_ptr<const Engine> EngineSlot::get() const
{
    std::lock_guard lock(mu_);
    return current_;
}

void EngineSlot::replace(std::shared_ptr<const Engine> next)
{
    std::lock_guard lock(mu_);
    current_ = std::move(next);
}

}  // namespace corpusmap::engine
